"""
M3: ComplEx scorer
F(h,r,t) = Re(hᵀ diag(r) t̄)
         = Σ_i [Re(h)Re(r)Re(t) + Im(h)Re(r)Im(t) + Re(h)Im(r)Im(t) − Im(h)Im(r)Re(t)]_i
"""
import numpy as np

from .base import BaseScorer, ScoreGrad


class ComplExScorer(BaseScorer):
    scorer_name = "complex"

    def score(self, model, h, r, t):
        hr, hi = model.entity_re[h], model.entity_im[h]
        rr, ri = model.relation_re[r], model.relation_im[r]
        tr, ti = model.entity_re[t], model.entity_im[t]
        return np.sum(hr * rr * tr + hi * rr * ti + hr * ri * ti - hi * ri * tr, axis=-1)

    def score_grad(self, model, h, r, t):
        hr, hi = model.entity_re[h], model.entity_im[h]
        rr, ri = model.relation_re[r], model.relation_im[r]
        tr, ti = model.entity_re[t], model.entity_im[t]
        return ScoreGrad(
            head_re=rr * tr + ri * ti,
            head_im=rr * ti - ri * tr,
            rel_re=hr * tr + hi * ti,
            rel_im=hr * ti - hi * tr,
            tail_re=hr * rr - hi * ri,
            tail_im=hi * rr + hr * ri,
        )

    def score_tails(self, model, h, r):
        hr, hi = model.entity_re[h], model.entity_im[h]
        rr, ri = model.relation_re[r], model.relation_im[r]
        return model.entity_re @ (hr * rr - hi * ri) + model.entity_im @ (hi * rr + hr * ri)

    def score_heads(self, model, r, t):
        rr, ri = model.relation_re[r], model.relation_im[r]
        tr, ti = model.entity_re[t], model.entity_im[t]
        return model.entity_re @ (rr * tr + ri * ti) + model.entity_im @ (rr * ti - ri * tr)

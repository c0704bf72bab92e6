"""
M3: RotatE scorer
F(h,r,t) = margin − Σ_i |h_i r_i − t_i|,   r_i = exp(iθ_i)  (|r_i| = 1)

relation 위상 θ는 relation_re에 저장하고 relation_im은 사용하지 않습니다 (항상 0).
"""
import numpy as np

from .base import BaseScorer, ScoreGrad

# 원점에서도 미분 가능하도록 modulus 안에 더하는 값
_SMOOTH = 1e-12


class RotatEScorer(BaseScorer):
    scorer_name = "rotate"
    regularize_relations = False

    def _residual(self, model, h, r, t):
        hr, hi = model.entity_re[h], model.entity_im[h]
        theta = model.relation_re[r]
        cos, sin = np.cos(theta), np.sin(theta)
        ur = hr * cos - hi * sin - model.entity_re[t]
        ui = hr * sin + hi * cos - model.entity_im[t]
        return hr, hi, cos, sin, ur, ui

    def score(self, model, h, r, t):
        *_, ur, ui = self._residual(model, h, r, t)
        return model.margin - np.sum(np.sqrt(ur * ur + ui * ui + _SMOOTH), axis=-1)

    def score_grad(self, model, h, r, t):
        hr, hi, cos, sin, ur, ui = self._residual(model, h, r, t)
        modulus = np.sqrt(ur * ur + ui * ui + _SMOOTH)
        d_ur, d_ui = -ur / modulus, -ui / modulus
        return ScoreGrad(
            head_re=d_ur * cos + d_ui * sin,
            head_im=-d_ur * sin + d_ui * cos,
            rel_re=d_ur * (-hr * sin - hi * cos) + d_ui * (hr * cos - hi * sin),
            rel_im=np.zeros_like(d_ur),
            tail_re=-d_ur,
            tail_im=-d_ui,
        )

    def score_tails(self, model, h, r):
        theta = model.relation_re[r]
        cos, sin = np.cos(theta), np.sin(theta)
        hr, hi = model.entity_re[h], model.entity_im[h]
        rot_re, rot_im = hr * cos - hi * sin, hr * sin + hi * cos
        ur = rot_re - model.entity_re
        ui = rot_im - model.entity_im
        return model.margin - np.sum(np.sqrt(ur * ur + ui * ui + _SMOOTH), axis=1)

    def score_heads(self, model, r, t):
        # |h∘r − t| = |h − t∘r̄|
        theta = model.relation_re[r]
        cos, sin = np.cos(theta), np.sin(theta)
        tr, ti = model.entity_re[t], model.entity_im[t]
        back_re, back_im = tr * cos + ti * sin, ti * cos - tr * sin
        ur = model.entity_re - back_re
        ui = model.entity_im - back_im
        return model.margin - np.sum(np.sqrt(ur * ur + ui * ui + _SMOOTH), axis=1)

    def init_relations(self, rng, count, dim, scale):
        return rng.uniform(-np.pi, np.pi, (count, dim)), np.zeros((count, dim))

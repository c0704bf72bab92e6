"""
M3: 손실 함수 + 해석적 gradient

목적 함수 (rule group F' = conclusion이 하나 이상 있는 rule):
    total = (1/|L|) Σ_L softplus(−y·F)
          + (1/|F'|) Σ_f [ L_dc(f) + L_rc(f) ]
          + μ · ‖Θ_touched‖²
    L_dc(f) = −(1/|C_f|) Σ_i (S_i − 0.5)²
    L_rc(f) = ((1/|C_f|) Σ_i S_i − c_f)²,   S_i = σ(F(h_i, r_i, t_i))

conclusion_label_mode
    rule_losses   위 식 그대로 (conclusion은 L_dc / L_rc로만 지도)
    all_positive  conclusion을 y=+1 예제로 logistic 항에 포함 (AC)
    weighted      conclusion을 soft label c_f로 logistic 항에 포함 (WC)
"""
from dataclasses import dataclass
from typing import Iterable, Mapping, NamedTuple, Sequence

import numpy as np

from config.schemas import TrainingConfig
from modules.m2_rule_engine.rules import ConclusionSet, HornRule
from .model import SCORE_CLAMP, EmbeddingModel, expit, sigmoid


class LabeledExample(NamedTuple):
    triple: tuple[int, int, int]
    label: int


@dataclass
class LabeledBatch:
    """LabeledExample 목록의 벡터화 형태"""
    triples: np.ndarray     # (n, 3) int64
    labels: np.ndarray      # (n,) float64, ±1

    def __post_init__(self):
        self.triples = np.asarray(self.triples, dtype=np.int64).reshape(-1, 3)
        self.labels = np.asarray(self.labels, dtype=np.float64).reshape(-1)
        if len(self.triples) != len(self.labels):
            raise ValueError("triples and labels differ in length")
        if not np.all(np.abs(self.labels) == 1.0):
            raise ValueError("labels must be exactly +1 or -1")

    def __len__(self) -> int:
        return len(self.labels)

    @classmethod
    def from_examples(cls, examples: Iterable[LabeledExample]) -> "LabeledBatch":
        examples = list(examples)
        return cls([e.triple for e in examples], [e.label for e in examples])

    @classmethod
    def from_positives(cls, positives: np.ndarray, negatives: np.ndarray) -> "LabeledBatch":
        positives = np.asarray(positives, dtype=np.int64).reshape(-1, 3)
        negatives = np.asarray(negatives, dtype=np.int64).reshape(-1, 3)
        labels = np.concatenate([np.ones(len(positives)), -np.ones(len(negatives))])
        return cls(np.concatenate([positives, negatives]), labels)


@dataclass
class LossBreakdown:
    logistic: float = 0.0
    dc: float = 0.0
    rc: float = 0.0
    l2: float = 0.0

    @property
    def total(self) -> float:
        return self.logistic + self.dc + self.rc + self.l2

    def to_dict(self) -> dict:
        return {"logistic": self.logistic, "dc": self.dc, "rc": self.rc, "l2": self.l2, "total": self.total}


def _as_batch(batch) -> LabeledBatch:
    if isinstance(batch, LabeledBatch):
        return batch
    return LabeledBatch.from_examples(batch)


def _as_groups(conclusions) -> dict[int, np.ndarray]:
    if conclusions is None:
        return {}
    if isinstance(conclusions, ConclusionSet):
        conclusions = conclusions.candidate_groups()
    return {int(rid): np.asarray(g, dtype=np.int64).reshape(-1, 3) for rid, g in conclusions.items()}


def _non_empty(groups: Mapping[int, np.ndarray]) -> list[int]:
    return [rid for rid in sorted(groups) if len(groups[rid])]


# ─── 개별 손실 ────────────────────────────────────────────────

def logistic_loss(model: EmbeddingModel, batch) -> float:
    """mean softplus(−y·F): logaddexp로 안정화"""
    batch = _as_batch(batch)
    if len(batch) == 0:
        raise ValueError("logistic_loss needs a non-empty batch")
    terms = np.logaddexp(0.0, -batch.labels * model.score(batch.triples))
    return float(terms.sum() / len(terms))


def conclusion_scores(model: EmbeddingModel, conclusions) -> dict[int, np.ndarray]:
    """rule id → S_i = σ(F) 배열 (그룹 구성 유지, 빈 그룹은 빈 배열)"""
    groups = _as_groups(conclusions)
    return {rid: (model.probability(g) if len(g) else np.empty(0)) for rid, g in groups.items()}


def _per_rule_dc(scores: Mapping[int, np.ndarray]) -> dict[int, float]:
    return {rid: float(-np.mean((np.asarray(s) - 0.5) ** 2)) for rid, s in scores.items() if len(s)}


def _per_rule_rc(scores: Mapping[int, np.ndarray], rules: Sequence[HornRule]) -> dict[int, float]:
    return {rid: float((np.mean(s) - rules[rid].confidence) ** 2) for rid, s in scores.items() if len(s)}


def dc_loss(scores: Mapping[int, np.ndarray]) -> float:
    """rule 평균 L_dc. 빈 그룹은 평균에서 제외"""
    per_rule = _per_rule_dc(scores)
    if not per_rule:
        raise ValueError("dc_loss needs at least one non-empty conclusion group")
    return sum(per_rule.values()) / len(per_rule)


def rc_loss(scores: Mapping[int, np.ndarray], rules: Sequence[HornRule]) -> float:
    """rule 평균 L_rc. 빈 그룹은 평균에서 제외"""
    per_rule = _per_rule_rc(scores, rules)
    if not per_rule:
        raise ValueError("rc_loss needs at least one non-empty conclusion group")
    return sum(per_rule.values()) / len(per_rule)


# ─── 목적 함수 구성 ───────────────────────────────────────────

class _Terms(NamedTuple):
    """logistic 항에 들어가는 예제 (triple, 종류별 계수)"""
    triples: np.ndarray
    labels: np.ndarray        # hard label (±1), soft 예제는 0
    soft: np.ndarray          # soft label c_f, hard 예제는 nan
    count: int


def _logistic_terms(batch: LabeledBatch, groups: dict[int, np.ndarray],
                    rules: Sequence[HornRule], mode: str) -> _Terms:
    triples = [batch.triples]
    labels = [batch.labels]
    soft = [np.full(len(batch), np.nan)]
    if mode in ("all_positive", "weighted"):
        for rid in _non_empty(groups):
            g = groups[rid]
            triples.append(g)
            if mode == "all_positive":
                labels.append(np.ones(len(g)))
                soft.append(np.full(len(g), np.nan))
            else:
                labels.append(np.zeros(len(g)))
                soft.append(np.full(len(g), rules[rid].confidence))
    triples = np.concatenate(triples).reshape(-1, 3)
    return _Terms(triples, np.concatenate(labels), np.concatenate(soft), len(triples))


def _touched_rows(triples: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    if len(triples) == 0:
        return np.empty(0, dtype=np.int64), np.empty(0, dtype=np.int64)
    entities = np.unique(np.concatenate([triples[:, 0], triples[:, 2]]))
    relations = np.unique(triples[:, 1])
    return entities, relations


def _uses_conclusions(config: TrainingConfig) -> bool:
    if config.conclusion_label_mode != "rule_losses":
        return True
    return config.dc_loss_enabled or config.rc_loss_enabled


def _loss_triples(batch: LabeledBatch, groups: dict[int, np.ndarray], config: TrainingConfig) -> np.ndarray:
    """어떤 손실 항에든 들어가는 triple 전체 (l2 대상 행 결정용)"""
    parts = [batch.triples]
    if _uses_conclusions(config):
        parts += [groups[rid] for rid in _non_empty(groups)]
    return np.concatenate(parts).reshape(-1, 3)


def total_objective(model: EmbeddingModel, batch, conclusions, rules: Sequence[HornRule],
                    config: TrainingConfig) -> LossBreakdown:
    """전체 목적 함수 (구성 요소별)"""
    batch = _as_batch(batch)
    groups = _as_groups(conclusions)
    mode = config.conclusion_label_mode
    out = LossBreakdown()

    terms = _logistic_terms(batch, groups, rules, mode)
    if terms.count:
        f = model.score(terms.triples)
        hard = np.isnan(terms.soft)
        values = np.empty(terms.count)
        values[hard] = np.logaddexp(0.0, -terms.labels[hard] * f[hard])
        c = terms.soft[~hard]
        values[~hard] = c * np.logaddexp(0.0, -f[~hard]) + (1.0 - c) * np.logaddexp(0.0, f[~hard])
        out.logistic = float(values.sum() / terms.count)

    if mode == "rule_losses" and _non_empty(groups):
        scores = conclusion_scores(model, {rid: groups[rid] for rid in _non_empty(groups)})
        if config.dc_loss_enabled:
            out.dc = dc_loss(scores)
        if config.rc_loss_enabled:
            out.rc = rc_loss(scores, rules)

    mu = config.effective_l2
    if mu > 0:
        entities, relations = _touched_rows(_loss_triples(batch, groups, config))
        reg = np.sum(model.entity_re[entities] ** 2) + np.sum(model.entity_im[entities] ** 2)
        if model.scorer.regularize_relations:
            reg += np.sum(model.relation_re[relations] ** 2) + np.sum(model.relation_im[relations] ** 2)
        out.l2 = float(mu * reg)
    return out


# ─── Gradient ────────────────────────────────────────────────

@dataclass
class SparseGradients:
    """갱신 대상 행만 담은 gradient (행 id는 정렬·중복 없음)"""
    entity_ids: np.ndarray
    entity_re: np.ndarray
    entity_im: np.ndarray
    relation_ids: np.ndarray
    relation_re: np.ndarray
    relation_im: np.ndarray

    def items(self):
        yield "entity_re", self.entity_ids, self.entity_re
        yield "entity_im", self.entity_ids, self.entity_im
        yield "relation_re", self.relation_ids, self.relation_re
        yield "relation_im", self.relation_ids, self.relation_im

    def to_dense(self, model: EmbeddingModel) -> dict[str, np.ndarray]:
        dense = {name: np.zeros_like(p) for name, p in model.parameters().items()}
        for name, ids, g in self.items():
            dense[name][ids] = g
        return dense


def _score_coefficients(model: EmbeddingModel, batch: LabeledBatch, groups: dict[int, np.ndarray],
                        rules: Sequence[HornRule], config: TrainingConfig) -> tuple[np.ndarray, np.ndarray]:
    """∂objective/∂F를 triple별로 구합니다. Returns: (triples, coefficients)"""
    mode = config.conclusion_label_mode
    triples, coefs = [], []

    terms = _logistic_terms(batch, groups, rules, mode)
    if terms.count:
        f = model.score(terms.triples)
        hard = np.isnan(terms.soft)
        g = np.empty(terms.count)
        y = terms.labels[hard]
        g[hard] = -y * expit(-y * f[hard])
        g[~hard] = expit(f[~hard]) - terms.soft[~hard]
        triples.append(terms.triples)
        coefs.append(g / terms.count)

    rule_ids = _non_empty(groups)
    if mode == "rule_losses" and rule_ids and (config.dc_loss_enabled or config.rc_loss_enabled):
        weight = 1.0 / len(rule_ids)
        for rid in rule_ids:
            g_triples = groups[rid]
            f = model.score(g_triples)
            s = sigmoid(f)
            ds_df = np.where(np.abs(f) < SCORE_CLAMP, s * (1.0 - s), 0.0)
            n = len(s)
            dl_ds = np.zeros(n)
            if config.dc_loss_enabled:
                dl_ds += -2.0 * (s - 0.5) / n
            if config.rc_loss_enabled:
                dl_ds += 2.0 * (s.mean() - rules[rid].confidence) / n
            triples.append(g_triples)
            coefs.append(weight * dl_ds * ds_df)

    if not triples:
        return np.empty((0, 3), dtype=np.int64), np.empty(0)
    return np.concatenate(triples), np.concatenate(coefs)


def gradients(model: EmbeddingModel, batch, conclusions, rules: Sequence[HornRule],
              config: TrainingConfig) -> SparseGradients:
    """total_objective의 해석적 gradient (건드린 행만)"""
    batch = _as_batch(batch)
    groups = _as_groups(conclusions)
    triples, coefs = _score_coefficients(model, batch, groups, rules, config)
    dim = model.dim

    h, r, t = triples[:, 0], triples[:, 1], triples[:, 2]
    entity_ids, entity_inv = np.unique(np.concatenate([h, t]), return_inverse=True)
    relation_ids, relation_inv = np.unique(r, return_inverse=True)
    entity_inv = entity_inv.reshape(-1)
    relation_inv = relation_inv.reshape(-1)

    g_ent_re = np.zeros((len(entity_ids), dim))
    g_ent_im = np.zeros((len(entity_ids), dim))
    g_rel_re = np.zeros((len(relation_ids), dim))
    g_rel_im = np.zeros((len(relation_ids), dim))

    if len(triples):
        sg = model.scorer.score_grad(model, h, r, t)
        c = coefs[:, None]
        np.add.at(g_ent_re, entity_inv, np.concatenate([c * sg.head_re, c * sg.tail_re]))
        np.add.at(g_ent_im, entity_inv, np.concatenate([c * sg.head_im, c * sg.tail_im]))
        np.add.at(g_rel_re, relation_inv, c * sg.rel_re)
        np.add.at(g_rel_im, relation_inv, c * sg.rel_im)

    mu = config.effective_l2
    if mu > 0:
        reg_entities, reg_relations = _touched_rows(_loss_triples(batch, groups, config))
        # l2 대상 행은 위 행 집합의 부분집합
        e_pos = np.searchsorted(entity_ids, reg_entities)
        g_ent_re[e_pos] += 2.0 * mu * model.entity_re[reg_entities]
        g_ent_im[e_pos] += 2.0 * mu * model.entity_im[reg_entities]
        if model.scorer.regularize_relations:
            r_pos = np.searchsorted(relation_ids, reg_relations)
            g_rel_re[r_pos] += 2.0 * mu * model.relation_re[reg_relations]
            g_rel_im[r_pos] += 2.0 * mu * model.relation_im[reg_relations]

    return SparseGradients(entity_ids, g_ent_re, g_ent_im, relation_ids, g_rel_re, g_rel_im)

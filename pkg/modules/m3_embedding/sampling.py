"""
M3: filtered negative sampling
head 또는 tail(균등 선택)을 균등 랜덤 entity로 바꾸고, KG에 있는 triple이면 다시 뽑습니다.
"""
import numpy as np

from modules.m1_kg_core.graph import Triple

# 포화된 relation에서 재추출 포기 횟수
MAX_TRIES = 100


def _corrupt(positive, corrupt_head: bool, entity: int) -> Triple:
    h, r, t = positive
    return Triple(int(entity), int(r), int(t)) if corrupt_head else Triple(int(h), int(r), int(entity))


def sample_negatives(kg, positive, eta: int, rng: np.random.Generator,
                     max_tries: int = MAX_TRIES) -> list[Triple]:
    """positive 하나당 η개의 corrupted triple"""
    if eta < 1:
        raise ValueError(f"eta must be ≥ 1, got {eta}")
    negatives = []
    for _ in range(eta):
        corrupt_head = bool(rng.random() < 0.5)
        candidate = _corrupt(positive, corrupt_head, rng.integers(kg.entity_count))
        tries = 1
        while candidate in kg and tries < max_tries:
            candidate = _corrupt(positive, corrupt_head, rng.integers(kg.entity_count))
            tries += 1
        negatives.append(candidate)
    return negatives


def sample_negative_batch(kg, positives: np.ndarray, eta: int, rng: np.random.Generator,
                          max_tries: int = MAX_TRIES) -> np.ndarray:
    """
    positive 배열 (n, 3) → negative 배열 (n·η, 3).
    positive i의 negative는 [i·η, (i+1)·η) 행에 놓입니다.
    """
    if eta < 1:
        raise ValueError(f"eta must be ≥ 1, got {eta}")
    positives = np.asarray(positives, dtype=np.int64).reshape(-1, 3)
    negatives = np.repeat(positives, eta, axis=0)
    n = len(negatives)
    if n == 0:
        return negatives
    column = np.where(rng.random(n) < 0.5, 0, 2)
    pending = np.arange(n)
    for _ in range(max_tries):
        negatives[pending, column[pending]] = rng.integers(kg.entity_count, size=len(pending))
        clash = np.fromiter((tuple(x) in kg for x in negatives[pending].tolist()),
                            dtype=bool, count=len(pending))
        pending = pending[clash]
        if len(pending) == 0:
            break
    return negatives

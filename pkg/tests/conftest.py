"""
공통 fixture: 작은 지식그래프 / 모델 / 학습 설정
"""
import numpy as np
import pytest

from config.schemas import TrainingConfig
from modules.m1_kg_core import KnowledgeGraph, Vocabulary
from modules.m3_embedding import EmbeddingModel


def build_graph(named_triples: list[tuple[str, str, str]]) -> KnowledgeGraph:
    """문자열 triple 목록 → vocabulary 포함 KnowledgeGraph"""
    vocab = Vocabulary()
    ids = [(vocab.entity_id(h), vocab.relation_id(r), vocab.entity_id(t)) for h, r, t in named_triples]
    return KnowledgeGraph(vocab.entity_count, vocab.relation_count, ids, vocab=vocab)


def random_graph(rng: np.random.Generator, entities: int, relations: int, size: int) -> KnowledgeGraph:
    heads = rng.integers(entities, size=size)
    rels = rng.integers(relations, size=size)
    tails = rng.integers(entities, size=size)
    return KnowledgeGraph(entities, relations, zip(heads.tolist(), rels.tolist(), tails.tolist()))


@pytest.fixture
def family_kg() -> KnowledgeGraph:
    """born_in(x,y) ∧ city_of(y,z) ⇒ nationality(x,z) 예제"""
    return build_graph([
        ("John", "born_in", "NewYork"),
        ("NewYork", "city_of", "USA"),
        ("John", "nationality", "USA"),
        ("Mary", "born_in", "NewYork"),
        ("Paris", "city_of", "France"),
    ])


@pytest.fixture
def small_model() -> EmbeddingModel:
    return EmbeddingModel.initialize(10, 3, 4, np.random.default_rng(7))


@pytest.fixture
def tiny_config() -> TrainingConfig:
    return TrainingConfig(dim=8, epochs=4, iterative_steps=2, batch_size=64, negatives=2,
                          learning_rate=0.1, progress=False)

from .graph import GraphView, KnowledgeGraph, Triple
from .loader import LoadReport, load_triples, save_triples
from .vocab import Vocabulary

from .generator import SyntheticDataset, generate

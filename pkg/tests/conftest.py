from pathlib import Path

import pytest

DATA_DIR = Path(__file__).resolve().parent.parent / "data"


@pytest.fixture(scope="session")
def sample_reviews_path():
    return DATA_DIR / "sample_reviews.jsonl"


@pytest.fixture(scope="session")
def toy_embeddings_path():
    return DATA_DIR / "toy_embeddings_50d.txt"

import numpy as np
import pytest

from verbspace.vocab import VerbVocabulary, default_vocabulary


@pytest.fixture(scope="session")
def vocab90():
    return default_vocabulary()


@pytest.fixture()
def tiny_vocab():
    """Four verbs: two manner, two result."""
    return VerbVocabulary(
        verbs=("pull", "rotate", "open", "fill"),
        verb_type={"pull": "Manner", "rotate": "Manner", "open": "Result", "fill": "Result"},
    )


@pytest.fixture()
def rng():
    return np.random.default_rng(42)

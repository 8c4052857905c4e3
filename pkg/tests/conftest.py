import math

import pytest

from sparse01.structures import Embedding, RelStructure, SubPair
from sparse01.weights import BaseContext

IRR = math.sqrt(2) / 4


def graph(n, edges):
    return RelStructure.graph(n, edges)


def cycle(n):
    return graph(n, [(i, (i + 1) % n) for i in range(n)])


def complete(n):
    return graph(n, [(i, j) for i in range(n) for j in range(i + 1, n)])


def embed_at(pair: SubPair, M: RelStructure, images):
    """Embedding of the small side of ``pair`` sending its sorted elements to ``images``."""
    return Embedding.make(pair.small_structure, M, images)


@pytest.fixture
def ctx06():
    return BaseContext.graph(0.6)

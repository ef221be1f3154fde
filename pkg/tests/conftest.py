import itertools

import numpy as np
import pytest

from ksimplex2vec.complex import clique_complex


def random_graph(n: int, p: float, rng: np.random.Generator) -> list[tuple[int, int]]:
    return [(u, v) for u, v in itertools.combinations(range(n), 2) if rng.random() < p]


@pytest.fixture
def triangle():
    return clique_complex([(0, 1), (0, 2), (1, 2)], 3, 2)


@pytest.fixture
def k4():
    return clique_complex(list(itertools.combinations(range(4), 2)), 4, 3)


@pytest.fixture
def c4():
    return clique_complex([(0, 1), (1, 2), (2, 3), (0, 3)], 4, 2)

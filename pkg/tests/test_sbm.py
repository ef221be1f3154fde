import itertools

import numpy as np
import pytest

from ksimplex2vec.complex import clique_complex, make_simplex
from ksimplex2vec.errors import UnknownVertex
from ksimplex2vec.sbm import class_labels, contiguous_blocks, sample_sbm, simplex_class, write_labels

SIZES, P_IN, P_OUT = [20, 20, 20], 0.8, 0.3


def test_expected_edge_count_formula():
    # 3 intra-block C(20,2) pairs at 0.8 plus 3 inter-block 20x20 pairs at 0.3
    assert 3 * 190 * P_IN + 3 * 400 * P_OUT == pytest.approx(816.0)


def test_three_block_shape():
    g = sample_sbm(SIZES, P_IN, P_OUT, seed=0)
    assert g.n_vertices == 60
    assert 700 < len(g.edges) < 930
    assert all(u < v for u, v in g.edges)
    assert len(set(g.edges)) == len(g.edges)


def test_seed_determinism():
    a = sample_sbm(SIZES, P_IN, P_OUT, seed=42)
    b = sample_sbm(SIZES, P_IN, P_OUT, seed=42)
    c = sample_sbm(SIZES, P_IN, P_OUT, seed=43)
    assert a.edges == b.edges
    assert a.edges != c.edges


def test_single_full_block_is_complete():
    g = sample_sbm([4], 1.0, 0.0, seed=9)
    assert g.edges == list(itertools.combinations(range(4), 2))


def test_zero_probabilities_give_empty_graph():
    g = sample_sbm([3, 5], 0.0, 0.0, seed=1)
    assert g.n_vertices == 8 and g.edges == []


@pytest.mark.parametrize("sizes,p_in,p_out", [([], 0.5, 0.1), ([3, 0], 0.5, 0.1), ([3], 0.2, 0.5), ([3], 1.2, 0.1)])
def test_invalid_parameters(sizes, p_in, p_out):
    with pytest.raises(ValueError):
        sample_sbm(sizes, p_in, p_out, seed=0)


def test_contiguous_blocks():
    assert contiguous_blocks([2, 3]).tolist() == [0, 0, 1, 1, 1]


def test_empirical_pair_probabilities():
    blocks = contiguous_blocks(SIZES)
    seeds = range(40)
    intra = inter = 0
    for s in seeds:
        e = np.array(sample_sbm(SIZES, P_IN, P_OUT, seed=s).edges)
        same = blocks[e[:, 0]] == blocks[e[:, 1]]
        intra += same.sum()
        inter += (~same).sum()
    n_intra, n_inter = 3 * 190 * len(seeds), 3 * 400 * len(seeds)
    for hits, pairs, p in ((intra, n_intra, P_IN), (inter, n_inter, P_OUT)):
        se = np.sqrt(p * (1 - p) / pairs)
        assert abs(hits / pairs - p) < 3 * se


class TestClasses:
    blocks = np.array([0, 0, 0, 1, 2])

    def test_edge_in_one_block(self):
        assert simplex_class(make_simplex([0, 1]), self.blocks) == (0, 0)

    def test_triangle_two_blocks(self):
        assert simplex_class(make_simplex([0, 1, 4]), self.blocks) == (0, 0, 2)

    def test_triangle_three_blocks(self):
        assert simplex_class(make_simplex([0, 3, 4]), self.blocks) == (0, 1, 2)

    def test_mapping_blocks(self):
        assert simplex_class(make_simplex([7, 9]), {7: 1, 9: 0}) == (0, 1)

    def test_unknown_vertex(self):
        with pytest.raises(UnknownVertex):
            simplex_class(make_simplex([0, 9]), self.blocks)
        with pytest.raises(UnknownVertex):
            simplex_class(make_simplex([0, 9]), {0: 0})

    @pytest.mark.parametrize("seed", range(20))
    def test_all_classes_populated(self, seed):
        g = sample_sbm(SIZES, P_IN, P_OUT, seed=seed)
        X = clique_complex(g.edges, g.n_vertices, 2)
        edge_labels, edge_classes = class_labels(X, 1, g.blocks)
        tri_labels, tri_classes = class_labels(X, 2, g.blocks)
        assert len(edge_classes) == 6 and len(tri_classes) == 10
        assert edge_classes == sorted(edge_classes)
        assert set(edge_labels.tolist()) == set(range(6))
        assert tri_classes[0] == (0, 0, 0) and tri_classes[-1] == (2, 2, 2)

    def test_single_block_all_zero(self):
        g = sample_sbm([8], 0.7, 0.0, seed=3)
        X = clique_complex(g.edges, g.n_vertices, 2)
        labels, classes = class_labels(X, 1, g.blocks)
        assert classes == [(0, 0)] and set(labels.tolist()) == {0}

    def test_labels_file(self, tmp_path):
        X = clique_complex([(0, 1), (1, 3), (0, 3)], 4, 2)
        blocks = np.array([0, 0, 1, 1])
        labels, classes = class_labels(X, 1, blocks)
        p = tmp_path / "labels.csv"
        write_labels(p, X, 1, labels, classes)
        assert p.read_text().splitlines() == [
            "simplex,class_multiset,label", "0-1,0-0,0", "0-3,0-1,1", "1-3,0-1,1",
        ]

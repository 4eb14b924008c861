"""The compiled and pure-Python kernels must agree everywhere."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dynmis import _kernels

from conftest import random_snapshot, snapshots

pytestmark = pytest.mark.skipif(_kernels.cython is None, reason="compiled kernels not built")
py, cy = _kernels.python, _kernels.cython


def test_backend_selected():
    assert _kernels.BACKEND == "cython"
    assert py.BACKEND == "python"


@settings(max_examples=200, deadline=None)
@given(snapshots(max_n=14), st.data())
def test_backends_agree(s, data):
    adj = s.adj
    est = np.array(data.draw(st.lists(st.floats(0, 1), min_size=s.n, max_size=s.n)), dtype=np.float64)
    nodes = data.draw(st.sets(st.integers(0, s.n - 1)))
    src = data.draw(st.sets(st.integers(0, s.n - 1), max_size=2))
    cutoff = data.draw(st.integers(0, 4))
    assert cy.diameter(adj) == py.diameter(adj)
    assert cy.greedy_mis(adj) == py.greedy_mis(adj)
    assert cy.round_estimates(adj, est) == py.round_estimates(adj, est)
    assert cy.hop_distances(adj, list(src), cutoff) == py.hop_distances(adj, list(src), cutoff)
    assert cy.exact_mis(adj) == py.exact_mis(adj)
    for a, b in zip(cy.neighborhood(adj, nodes), py.neighborhood(adj, nodes)):
        assert a.tolist() == b.tolist()
    assert cy.is_independent(adj, nodes) == py.is_independent(adj, nodes)


@pytest.mark.parametrize("seed", range(5))
def test_backends_agree_on_larger_graphs(seed):
    s = random_snapshot(np.random.default_rng(seed), 80, 0.06)
    est = np.random.default_rng(seed + 100).random(80)
    assert cy.exact_mis(s.adj) == py.exact_mis(s.adj)
    assert cy.round_estimates(s.adj, est) == py.round_estimates(s.adj, est)
    assert cy.greedy_mis(s.adj) == py.greedy_mis(s.adj)
    assert cy.diameter(s.adj) == py.diameter(s.adj)


def test_neighborhood_layout():
    from conftest import path

    nodes, local, indptr, cols, pos = cy.neighborhood(path(5).adj, [3, 1])
    assert nodes.tolist() == [1, 3]
    assert local.tolist() == [0, 1, 2, 3, 4]
    assert indptr.tolist() == [0, 2, 4]
    assert local[cols].tolist() == [0, 2, 2, 4]
    assert local[pos].tolist() == [1, 3]


def test_round_estimates_length_check():
    with pytest.raises(ValueError):
        cy.round_estimates(((), ()), np.zeros(3))


def test_neighborhood_out_of_range():
    with pytest.raises(IndexError):
        cy.neighborhood(((), ()), [2])

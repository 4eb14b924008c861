import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from dynmis.dyngraph import Snapshot, validate
from dynmis.genesis import (
    ER,
    PRESETS,
    EventRange,
    GenSpec,
    PowerLaw,
    SplitSpec,
    gen_events,
    gen_initial,
    generate,
    split,
)

from conftest import complete


def log_binned_slope(degrees: np.ndarray) -> float:
    """Least-squares slope of log density vs log degree over log-spaced bins."""
    edges = np.unique(np.floor(np.logspace(0, np.log10(degrees.max() + 1), 15)).astype(int))
    counts, _ = np.histogram(degrees, bins=edges)
    density = counts / np.diff(edges)
    centers = np.sqrt(edges[:-1] * edges[1:])
    keep = density > 0
    return float(np.polyfit(np.log(centers[keep]), np.log(density[keep]), 1)[0])


class TestInitial:
    def test_er_p_one_is_complete(self):
        s = gen_initial(GenSpec(ER(1.0), 4))
        assert s == complete(4) and s.edge_count == 6

    def test_er_p_zero_is_empty(self):
        assert gen_initial(GenSpec(ER(0.0), 10)).edge_count == 0

    def test_er_deterministic(self):
        a = gen_initial(GenSpec(ER(0.05), 100, seed=7))
        b = gen_initial(GenSpec(ER(0.05), 100, seed=7))
        assert a.adj == b.adj
        assert a != gen_initial(GenSpec(ER(0.05), 100, seed=8))

    def test_er_density(self):
        s = gen_initial(GenSpec(ER(0.05), 400, seed=0))
        expected = 0.05 * 400 * 399 / 2
        assert abs(s.edge_count - expected) < 4 * np.sqrt(expected)

    def test_power_law_slope(self):
        s = gen_initial(GenSpec(PowerLaw(2.5), 1000, seed=0))
        slope = log_binned_slope(s.degrees())
        assert -3.0 <= slope <= -2.0

    def test_power_law_simple_graph(self):
        s = gen_initial(GenSpec(PowerLaw(2.2, min_degree=1), 300, seed=4))
        for v, row in enumerate(s.adj):
            assert v not in row and len(set(row)) == len(row)
        assert s.degrees().max() <= 299

    def test_power_law_deterministic(self):
        spec = GenSpec(PowerLaw(2.5), 200, seed=11)
        assert gen_initial(spec) == gen_initial(spec)

    @pytest.mark.parametrize("bad", [lambda: ER(1.5), lambda: ER(-0.1), lambda: PowerLaw(1.0),
                                     lambda: PowerLaw(2.0, 0), lambda: GenSpec(ER(0.1), 5, T=-1),
                                     lambda: GenSpec(ER(0.1), 5, add_fraction=1.2)])
    def test_invalid_specs(self, bad):
        with pytest.raises(ValueError):
            bad()


class TestEvents:
    def test_forced_adds(self):
        dg = gen_events(Snapshot.empty(5), GenSpec(ER(0.0), 5, T=3, add_fraction=1.0))
        assert all(e.is_add for e in dg.events)
        assert list(dg.snapshots())[-1].edge_count == 3

    def test_forced_deletes(self):
        dg = gen_events(complete(4), GenSpec(ER(1.0), 4, T=2, add_fraction=0.0))
        assert not any(e.is_add for e in dg.events)
        assert list(dg.snapshots())[-1].edge_count == 4

    def test_fallback_when_complete(self):
        dg = gen_events(complete(3), GenSpec(ER(1.0), 3, T=1, add_fraction=1.0))
        assert not dg.events[0].is_add

    def test_fallback_when_empty(self):
        dg = gen_events(Snapshot.empty(3), GenSpec(ER(0.0), 3, T=1, add_fraction=0.0))
        assert dg.events[0].is_add

    def test_times_are_one_based(self):
        dg = generate(GenSpec(ER(0.1), 20, T=30, seed=2))
        assert [e.time for e in dg.events] == list(range(1, 31))

    def test_drift_fixed_seed(self):
        dg = generate(GenSpec(ER(0.05), 100, T=1000, seed=0))
        assert validate(dg) == []
        m0 = dg.initial.edge_count
        assert abs(list(dg.snapshots())[-1].edge_count - m0) <= 0.15 * m0

    def test_drift_unbiased_over_seeds(self):
        drifts = []
        for seed in range(20):
            dg = generate(GenSpec(ER(0.05), 100, T=1000, seed=seed))
            final = dg.initial.edge_count + sum(1 if e.is_add else -1 for e in dg.events)
            drifts.append(final - dg.initial.edge_count)
        # a +-1 walk of 1000 steps has std ~31.6; the mean of 20 has std ~7
        assert abs(np.mean(drifts)) < 25

    def test_add_fraction_respected(self):
        dg = generate(GenSpec(ER(0.05), 100, T=2000, add_fraction=0.8, seed=5))
        frac = np.mean([e.is_add for e in dg.events])
        assert abs(frac - 0.8) < 0.04

    def test_dense_graph_adds(self):
        dg = generate(GenSpec(ER(0.9), 30, T=300, add_fraction=0.7, seed=1))
        assert validate(dg) == []

    @given(st.integers(0, 2**32), st.floats(0, 1), st.integers(2, 15))
    def test_generated_streams_validate(self, seed, frac, n):
        dg = generate(GenSpec(ER(0.3), n, T=40, add_fraction=frac, seed=seed))
        assert validate(dg) == [] and dg.T == 40

    def test_bit_identical(self):
        spec = GenSpec(PowerLaw(2.5), 100, T=200, seed=9)
        assert generate(spec) == generate(spec)


class TestSplit:
    @pytest.mark.parametrize(
        "T, fr, want",
        [
            (100, (0.7, 0.15, 0.15), [(1, 70), (71, 85), (86, 100)]),
            (100, (0.5, 0.25, 0.25), [(1, 50), (51, 75), (76, 100)]),
            (10, (0.7, 0.15, 0.15), [(1, 7), (8, 8), (9, 10)]),
        ],
    )
    def test_examples(self, T, fr, want):
        assert [r.as_tuple() for r in split(T, SplitSpec(*fr))] == want

    @given(st.integers(0, 10_000))
    def test_partition(self, T):
        ranges = split(T)
        covered = [t for r in ranges for t in r]
        assert covered == list(range(1, T + 1))
        assert sum(len(r) for r in ranges) == T

    def test_accepts_dynamic_graph(self):
        dg = generate(GenSpec(ER(0.1), 10, T=20))
        assert split(dg)[2] == EventRange(18, 20)

    @pytest.mark.parametrize("fr", [(0.5, 0.5, 0.1), (0.0, 0.5, 0.5), (0.7, 0.2, 0.2)])
    def test_invalid_fractions(self, fr):
        with pytest.raises(ValueError):
            SplitSpec(*fr)

    def test_empty_range(self):
        r = EventRange(5, 4)
        assert len(r) == 0 and list(r) == []


def test_presets():
    assert PRESETS["small"] == {"n": 100, "T": 50_000}
    assert PRESETS["medium"] == {"n": 1_000, "T": 100_000}
    assert PRESETS["large"] == {"n": 10_000, "T": 5_000}

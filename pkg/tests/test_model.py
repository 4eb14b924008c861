import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dynmis.dyngraph import EdgeEvent, Snapshot, apply_event, diameter, event_distances
from dynmis.genesis import ER, GenSpec, generate
from dynmis.model import (
    Config,
    DistanceOutOfRadius,
    Engine,
    NodeState,
    Variant,
    build_memories,
    compute_estimates,
    cumulative_loss,
    encode_signal,
    event_forward,
    full_estimates,
    node_loss,
    round_solution,
    update_memories,
)
from dynmis.neural import autodiff as ad
from dynmis.neural.gradcheck import max_relative_error
from dynmis.neural.layers import Dims, ModelParams

from conftest import complete, cycle, path, random_snapshot, snapshots

SMALL = Dims(memory_dim=4, hidden_dim=4, embed_dim=4, mlp_widths=(3, 1))


def small_cfg(alpha=1, beta=1, variant=Variant.BCAS, c=3.0):
    return Config(variant=variant, alpha=alpha, beta=beta, c=c, dims=SMALL)


def random_state(rng, n, dims=SMALL):
    return NodeState(rng.normal(size=(n, dims.memory_dim)), rng.random(n))


def reference_estimate(params, memory, s, v):
    """p(v) evaluated straight from the formulas, one node at a time."""
    a = params.arrays
    agg = np.zeros(memory.shape[1])
    for u in s.adj[v]:
        agg = agg + memory[u]
    ht = np.maximum(a["W1"] @ agg, 0.0)
    h = a["W2"] @ np.concatenate([ht, memory[v], [float(len(s.adj[v]))]])
    z = np.maximum(a["mlp.0.W"] @ h + a["mlp.0.b"], 0.0)
    logit = (a["mlp.1.W"] @ z + a["mlp.1.b"])[0]
    return 1.0 / (1.0 + math.exp(-logit))


class TestConfig:
    def test_bcas_radii(self):
        g0 = path(13)  # diameter 12
        cfg = Config.for_graph(g0, "bcas", 0.25)
        assert (cfg.alpha, cfg.beta) == (3, 3)

    def test_bcas_minimum_one(self):
        assert Config.radii(Variant.BCAS, 0.25, 1) == (1, 1)

    def test_bcas_rounds_half_up(self):
        assert Config.radii(Variant.BCAS, 0.25, 10) == (3, 3)
        assert Config.radii(Variant.BCAS, 0.25, 9) == (2, 2)

    def test_nocas_radii(self):
        cfg = Config.for_graph(cycle(8), Variant.NOCAS)
        assert (cfg.alpha, cfg.beta) == (0, 4)

    @pytest.mark.parametrize("kw", [dict(c=0.0), dict(alpha=-1), dict(gamma=1.5), dict(gamma=0.0)])
    def test_invalid(self, kw):
        with pytest.raises(ValueError):
            Config(**kw)

    def test_dict_round_trip(self):
        cfg = Config.for_graph(path(9), "nocas", c=2.5, dims=SMALL, lr=3e-4)
        assert Config.from_dict(cfg.to_dict()) == cfg


class TestSignal:
    def test_add_at_event(self):
        np.testing.assert_array_equal(encode_signal(EdgeEvent.add(0, 1), 0, small_cfg(4, 4)), [1, 0, -1])

    def test_delete_at_radius(self):
        np.testing.assert_array_equal(encode_signal(EdgeEvent.delete(0, 1), 4, small_cfg(4, 4)), [0, 1, 1])

    def test_delete_midpoint(self):
        np.testing.assert_array_equal(encode_signal(EdgeEvent.delete(0, 1), 2, small_cfg(4, 4)), [0, 1, 0])

    def test_alpha_zero(self):
        np.testing.assert_array_equal(encode_signal(EdgeEvent.add(0, 1), 0, small_cfg(0, 3)), [1, 0, -1])

    @pytest.mark.parametrize("alpha, dist", [(4, 5), (0, 1), (3, -1)])
    def test_out_of_radius(self, alpha, dist):
        with pytest.raises(DistanceOutOfRadius):
            encode_signal(EdgeEvent.add(0, 1), dist, small_cfg(alpha, 3))


class TestUpdateMemories:
    def test_nocas_touches_two(self, rng):
        s = apply_event(path(6), EdgeEvent.add(0, 5))
        st_ = random_state(rng, 6)
        p = ModelParams.init(SMALL, rng)
        out = update_memories(st_, s, EdgeEvent.add(0, 5), p, small_cfg(0, 3))
        changed = np.flatnonzero((out.memory != st_.memory).any(axis=1))
        assert changed.tolist() == [0, 5]

    def test_radius_covers_component(self, rng):
        s0 = Snapshot.from_edges(8, [(0, 1), (1, 2), (2, 3), (5, 6)])
        e = EdgeEvent.add(3, 4)
        s = apply_event(s0, e)
        st_ = random_state(rng, 8)
        out = update_memories(st_, s, e, ModelParams.init(SMALL, rng), small_cfg(10, 10))
        changed = np.flatnonzero((out.memory != st_.memory).any(axis=1))
        assert changed.tolist() == [0, 1, 2, 3, 4]

    def test_zero_params_halve(self, rng):
        e = EdgeEvent.delete(1, 2)
        s = apply_event(path(5), e)
        st_ = random_state(rng, 5)
        out = update_memories(st_, s, e, ModelParams.zeros(SMALL), small_cfg(1, 1))
        near = sorted(event_distances(s, e, 1))
        np.testing.assert_array_equal(out.memory[near], 0.5 * st_.memory[near])
        far = [v for v in range(5) if v not in near]
        np.testing.assert_array_equal(out.memory[far], st_.memory[far])

    def test_input_state_untouched(self, rng):
        st_ = random_state(rng, 4)
        before = st_.memory.copy()
        e = EdgeEvent.add(0, 3)
        update_memories(st_, apply_event(path(4), e), e, ModelParams.init(SMALL, rng), small_cfg(1, 1))
        np.testing.assert_array_equal(st_.memory, before)


class TestEstimates:
    def test_isolated_zero_params(self):
        st_ = NodeState.zeros(3, SMALL.memory_dim)
        out = compute_estimates(st_, Snapshot.empty(3), [1], ModelParams.zeros(SMALL))
        assert out.estimate.tolist() == [0.0, 0.5, 0.0]

    def test_empty_affected(self, rng):
        st_ = random_state(rng, 5)
        out = compute_estimates(st_, path(5), [], ModelParams.init(SMALL, rng))
        np.testing.assert_array_equal(out.estimate, st_.estimate)

    @pytest.mark.parametrize("seed", range(3))
    def test_matches_reference_on_p3(self, seed):
        rng = np.random.default_rng(seed)
        p = ModelParams.init(SMALL, rng)
        for k in ("mlp.0.b", "mlp.1.b"):
            p.arrays[k] = rng.normal(size=p.arrays[k].shape)
        st_ = random_state(rng, 3)
        out = compute_estimates(st_, path(3), [0, 1, 2], p)
        ref = [reference_estimate(p, st_.memory, path(3), v) for v in range(3)]
        np.testing.assert_allclose(out.estimate, ref, rtol=0, atol=1e-12)

    def test_uses_unaffected_neighbors(self, rng):
        p = ModelParams.init(SMALL, rng)
        st_ = random_state(rng, 4)
        out = compute_estimates(st_, path(4), [1], p)
        assert out.estimate[1] == pytest.approx(reference_estimate(p, st_.memory, path(4), 1), abs=1e-12)
        np.testing.assert_array_equal(out.estimate[[0, 2, 3]], st_.estimate[[0, 2, 3]])

    def test_idempotent(self, rng):
        p = ModelParams.init(SMALL, rng)
        s = random_snapshot(rng, 20, 0.2)
        st_ = random_state(rng, 20)
        once = compute_estimates(st_, s, range(20), p)
        twice = compute_estimates(once, s, range(20), p)
        np.testing.assert_array_equal(once.estimate, twice.estimate)

    @settings(max_examples=40, deadline=None)
    @given(snapshots(max_n=10), st.integers(0, 2**32))
    def test_estimates_in_unit_interval(self, s, seed):
        rng = np.random.default_rng(seed)
        p = ModelParams.init(SMALL, rng)
        p.arrays["mlp.1.W"] *= 50.0
        out = compute_estimates(random_state(rng, s.n), s, range(s.n), p)
        assert np.all((out.estimate >= 0.0) & (out.estimate <= 1.0))


class TestLoss:
    def test_isolated(self):
        assert node_loss(0.8, [], 0, 3.0) == pytest.approx(-0.8)

    def test_single_neighbor(self):
        assert node_loss(1.0, [1.0], 1, 3.0) == pytest.approx(0.5)

    def test_all_zero(self):
        assert node_loss(0.0, [0.0, 0.0], 2, 3.0) == 0.0

    def test_degree_mismatch(self):
        with pytest.raises(ValueError):
            node_loss(0.5, [0.1], 2, 3.0)

    def test_cumulative_empty(self, rng):
        assert cumulative_loss(random_state(rng, 3), path(3), [], 3.0) == 0.0

    def test_cumulative_regular_all_one(self):
        s = cycle(7)
        st_ = NodeState(np.zeros((7, 4)), np.ones(7))
        assert cumulative_loss(st_, s, range(7), 3.0) == pytest.approx(0.5 * 7)

    def test_cumulative_isolated(self):
        st_ = NodeState(np.zeros((2, 4)), np.array([0.6, 0.9]))
        assert cumulative_loss(st_, Snapshot.empty(2), [0], 3.0) == pytest.approx(-0.6)

    @pytest.mark.parametrize("seed", range(10))
    def test_matches_double_loop(self, seed):
        rng = np.random.default_rng(seed)
        s = random_snapshot(rng, 30, 0.15)
        est = rng.random(30)
        c = 1.0 + 4.0 * rng.random()
        ref = 0.0
        for v in range(30):
            ref -= est[v]
            d = len(s.adj[v])
            if d:
                ref += c / (2 * d) * sum(est[u] * est[v] for u in s.adj[v])
        got = cumulative_loss(NodeState(np.zeros((30, 4)), est), s, range(30), c)
        assert abs(got - ref) < 1e-10

    def test_node_loss_agrees_with_cumulative(self, rng):
        s = random_snapshot(rng, 12, 0.3)
        est = rng.random(12)
        per = sum(node_loss(est[v], [est[u] for u in s.adj[v]], len(s.adj[v]), 3.0) for v in range(12))
        assert cumulative_loss(NodeState(np.zeros((12, 4)), est), s, range(12), 3.0) == pytest.approx(per, abs=1e-12)


class TestRounding:
    def _st(self, est):
        return NodeState(np.zeros((len(est), 1)), np.asarray(est, dtype=float))

    def test_below_threshold(self):
        assert round_solution(self._st([0.4] * 4), path(4)) == frozenset()

    def test_threshold_only(self):
        assert round_solution(self._st([0.9, 0.2, 0.8]), path(3)) == {0, 2}

    def test_triangle(self):
        assert len(round_solution(self._st([0.9] * 3), complete(3))) == 1

    def test_tie_breaks(self):
        # K3, equal violations: the lower estimate goes first, then the larger id
        assert round_solution(self._st([0.9, 0.7, 0.8]), complete(3)) == {0}
        assert round_solution(self._st([0.6, 0.6, 0.6]), complete(3)) == {0}

    def test_most_violations_first(self):
        # star centre has 3 in-candidate neighbors, removed first; leaves survive
        assert round_solution(self._st([0.99, 0.6, 0.6, 0.6]), Snapshot.from_edges(4, [(0, 1), (0, 2), (0, 3)])) == {1, 2, 3}

    def test_exactly_half_included(self):
        assert round_solution(self._st([0.5, 0.49999]), Snapshot.empty(2)) == {0}

    def test_ten_thousand_random_pairs(self):
        rng = np.random.default_rng(2024)
        for _ in range(10_000):
            n = int(rng.integers(1, 25))
            s = random_snapshot(rng, n, float(rng.random()))
            est = rng.random(n) if rng.random() < 0.5 else rng.choice([0.2, 0.5, 0.9], n)
            sol = round_solution(self._st(est), s)
            assert s.is_independent(sol)
            assert all(est[v] >= 0.5 for v in sol)


class TestEventForward:
    def _setup(self, rng, cfg, n=25, p=0.15):
        s0 = random_snapshot(rng, n, p)
        params = ModelParams.init(SMALL, rng)
        return s0, params, random_state(rng, n)

    @pytest.mark.parametrize("alpha, beta", [(1, 1), (2, 2), (0, 3), (1, 3), (3, 1)])
    def test_matches_functional_path(self, rng, alpha, beta):
        cfg = small_cfg(alpha, beta)
        s0, params, st_ = self._setup(rng, cfg)
        u, v = 0, 1
        e = EdgeEvent.delete(u, v) if s0.has_edge(u, v) else EdgeEvent.add(u, v)
        s = apply_event(s0, e)
        res = event_forward(params.leaves(False), cfg, st_, s, e)
        mem = update_memories(st_, s, e, params, cfg)
        affected = sorted(event_distances(s, e, beta))
        est = compute_estimates(mem, s, affected, params)
        after = st_.copy()
        res.write(after)
        np.testing.assert_array_equal(after.memory, mem.memory)
        np.testing.assert_allclose(after.estimate, est.estimate, rtol=0, atol=1e-15)
        assert float(res.loss.data) == pytest.approx(cumulative_loss(after, s, affected, cfg.c), abs=1e-12)

    def test_locality(self, rng):
        cfg = small_cfg(1, 2)
        dg = generate(GenSpec(ER(0.04), 60, T=200, seed=5))
        eng = Engine(ModelParams.init(SMALL, rng), cfg, dg.initial, random_state(rng, 60))
        for e in dg.events:
            before = eng.state.copy()
            eng.step(e)
            da = event_distances(eng.snapshot, e, cfg.alpha)
            db = event_distances(eng.snapshot, e, cfg.beta)
            far_a = [v for v in range(60) if v not in da]
            far_b = [v for v in range(60) if v not in db]
            np.testing.assert_array_equal(eng.state.memory[far_a], before.memory[far_a])
            np.testing.assert_array_equal(eng.state.estimate[far_b], before.estimate[far_b])

    @pytest.mark.parametrize("seed", range(4))
    def test_gradient_chain(self, seed):
        rng = np.random.default_rng(seed)
        cfg = small_cfg(2, 2)
        s0 = random_snapshot(rng, 10, 0.3)
        e = EdgeEvent.delete(*next(s0.edges())) if s0.edge_count else EdgeEvent.add(0, 1)
        s = apply_event(s0, e)
        st_ = random_state(rng, 10)
        arrays = ModelParams.init(SMALL, rng).arrays

        def fn(tp):
            return event_forward(tp, cfg, st_, s, e).loss

        assert max_relative_error(fn, {k: v.copy() for k, v in arrays.items()}) < 1e-4

    def test_pretraining_chain_gradient(self, rng):
        cfg = small_cfg(1, 1)
        s = random_snapshot(rng, 7, 0.35)
        edges = list(s.edges())
        arrays = ModelParams.init(SMALL, rng).arrays

        def fn(tp):
            return full_estimates(tp, cfg, build_memories(tp, 7, edges, SMALL.memory_dim), s)[1]

        assert max_relative_error(fn, {k: v.copy() for k, v in arrays.items()}) < 1e-4


class TestBuildMemories:
    def test_only_endpoints_change(self, rng):
        params = ModelParams.init(SMALL, rng).leaves(False)
        edges = [(0, 1), (2, 3), (1, 2), (0, 4)]
        prev = build_memories(params, 6, [], SMALL.memory_dim).data
        for k in range(1, len(edges) + 1):
            cur = build_memories(params, 6, edges[:k], SMALL.memory_dim).data
            changed = np.flatnonzero((cur != prev).any(axis=1)).tolist()
            assert changed == sorted(edges[k - 1])
            prev = cur

    def test_no_edges_gives_zero(self, rng):
        out = build_memories(ModelParams.init(SMALL, rng).leaves(False), 4, [], SMALL.memory_dim)
        assert out.data.shape == (4, 4) and not out.data.any()


class TestEngine:
    def test_warm_start_matches_full_estimates(self, rng):
        params = ModelParams.init(SMALL, rng)
        cfg = small_cfg(1, 1)
        s = random_snapshot(rng, 15, 0.2)
        eng = Engine.warm_start(params, cfg, s)
        with ad.no_grad():
            mem = build_memories(params.leaves(False), 15, list(s.edges()), 4)
            p, _ = full_estimates(params.leaves(False), cfg, mem, s)
        np.testing.assert_array_equal(eng.state.memory, mem.data)
        np.testing.assert_array_equal(eng.state.estimate, p.data)

    def test_solution_independent_across_stream(self, rng):
        dg = generate(GenSpec(ER(0.08), 40, T=150, seed=9))
        eng = Engine.warm_start(ModelParams.init(SMALL, rng), small_cfg(1, 1), dg.initial)
        for s, e in zip(list(dg.snapshots())[1:], dg.events):
            eng.step(e)
            assert eng.snapshot == s
            assert s.is_independent(eng.solution())

    def test_shape_check(self, rng):
        with pytest.raises(ValueError):
            Engine(ModelParams.init(SMALL, rng), small_cfg(), path(3), NodeState.zeros(4, 4))

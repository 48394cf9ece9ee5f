import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from bocs_hedge.annealer import (AnnealConfig, SaSchedule, anneal, metropolis_accept,
                                 multi_restart)
from bocs_hedge.benchgen import generate_hubo, generate_qubo
from bocs_hedge.core import DimensionMismatchError, all_binary_vectors, derive_rng
from bocs_hedge.annealer import _PROBE_KEY
from bocs_hedge.objectives import (CubicObjective, FunctionObjective, QuadraticObjective,
                                   TabulatedObjective, exhaustive_minimum, table_points)


def brute_force(obj):
    V = all_binary_vectors(obj.d)
    vals = np.array([obj.evaluate(v) for v in V])
    i = int(np.argmin(vals))  # V is lexicographic, so the first minimum is the smallest tie
    return V[i], vals[i]


def random_objectives(d, seed):
    q = generate_qubo(d, seed).to_objective()
    c = generate_hubo(d, seed).to_objective()
    return [q, c, TabulatedObjective.from_objective(q),
            FunctionObjective(lambda x: float(np.sin(np.arange(1, d + 1) @ x)), d)]


class TestObjectives:
    def test_quadratic_folds_lower_triangle(self):
        Q = np.array([[0.0, 1.0], [2.0, 0.0]])
        obj = QuadraticObjective([0.5, -1.0], Q, constant=3.0)
        assert obj.evaluate([1, 1]) == pytest.approx(3.0 + 0.5 - 1.0 + 3.0)

    def test_quadratic_diagonal_rejected(self):
        with pytest.raises(ValueError):
            QuadraticObjective([0, 0], np.eye(2))

    def test_shape_errors(self):
        with pytest.raises(DimensionMismatchError):
            QuadraticObjective([0, 0, 0], np.zeros((2, 2)))
        with pytest.raises(DimensionMismatchError):
            CubicObjective([0, 0], np.zeros((2, 2)), np.zeros((3, 3, 3)))
        with pytest.raises(DimensionMismatchError):
            generate_qubo(3, 0).to_objective().evaluate([0, 1])

    def test_cubic_reads_only_increasing_triples(self):
        C = np.zeros((3, 3, 3))
        C[0, 1, 2] = 2.0
        C[2, 1, 0] = 100.0  # ignored
        obj = CubicObjective(np.zeros(3), np.zeros((3, 3)), C)
        assert obj.evaluate([1, 1, 1]) == 2.0
        assert obj.evaluate([1, 1, 0]) == 0.0

    def test_table_bit_order(self):
        obj = TabulatedObjective(np.arange(8.0))
        assert obj.evaluate([1, 0, 0]) == 1.0
        assert obj.evaluate([0, 0, 1]) == 4.0
        np.testing.assert_array_equal(table_points(2), [[0, 0], [1, 0], [0, 1], [1, 1]])

    def test_table_length(self):
        with pytest.raises(ValueError):
            TabulatedObjective(np.zeros(6))

    @given(st.integers(2, 7), st.integers(0, 500), st.data())
    def test_flip_delta_matches_reevaluation(self, d, seed, data):
        x = np.array(data.draw(st.lists(st.integers(0, 1), min_size=d, max_size=d)), np.uint8)
        k = data.draw(st.integers(0, d - 1))
        for obj in random_objectives(d, seed):
            y = x.copy()
            y[k] ^= 1
            assert obj.flip_delta(x, k) == pytest.approx(obj.evaluate(y) - obj.evaluate(x),
                                                         abs=1e-9)

    @given(st.integers(1, 7), st.integers(0, 500))
    def test_batch_matches_scalar(self, d, seed):
        X = all_binary_vectors(d)
        for obj in random_objectives(d, seed):
            np.testing.assert_allclose(obj.evaluate_batch(X), [obj.evaluate(x) for x in X],
                                       atol=1e-12)

    @pytest.mark.parametrize("d", [1, 2, 5, 9])
    def test_exhaustive_matches_brute_force(self, d):
        for seed in range(3):
            for obj in random_objectives(d, seed):
                x, v = exhaustive_minimum(obj)
                bx, bv = brute_force(obj)
                assert v == pytest.approx(bv, abs=1e-12)
                np.testing.assert_array_equal(x, bx)

    def test_exhaustive_chunked_path(self):
        obj = generate_qubo(10, 3).to_objective()
        wrapped = FunctionObjective(obj.evaluate, 10)
        x, v = exhaustive_minimum(wrapped, chunk_dim=4)
        bx, bv = exhaustive_minimum(obj)
        assert v == pytest.approx(bv)
        np.testing.assert_array_equal(x, bx)

    def test_exhaustive_tie_goes_to_smallest(self):
        obj = QuadraticObjective([0.0, 0.0, 0.0], np.zeros((3, 3)))
        x, v = exhaustive_minimum(obj)
        np.testing.assert_array_equal(x, [0, 0, 0])
        obj = QuadraticObjective([-1.0, 0.0, -1.0], np.array([[0, 0, 1.0], [0, 0, 0], [0, 0, 0]]))
        x, v = exhaustive_minimum(obj)  # minima at 100 and 001
        np.testing.assert_array_equal(x, [0, 0, 1])


class TestMetropolis:
    def test_improving_always_accepted(self):
        assert metropolis_accept(-1.0, 1e-12, 0.999999)
        assert metropolis_accept(0.0, 1.0, 0.999999)

    def test_zero_temperature_rejects_worsening(self):
        for delta in (1e-6, 1.0, 1e6):
            assert not metropolis_accept(delta, 1e-12, 1e-300)

    def test_infinite_temperature_accepts(self):
        u = np.random.default_rng(0).random(1000)
        assert all(metropolis_accept(5.0, 1e12, ui) for ui in u[u < 0.999999])


class TestSchedule:
    def test_invalid(self):
        with pytest.raises(ValueError):
            SaSchedule(sweeps=0)
        with pytest.raises(ValueError):
            SaSchedule(t_init=1.0, t_final=2.0)

    def test_geometric(self):
        s = SaSchedule(sweeps=5, t_init=10.0, t_final=0.01)
        T = s.temperatures()
        assert T[0] == pytest.approx(10.0) and T[-1] == pytest.approx(0.01)
        np.testing.assert_allclose(T[1:] / T[:-1], (0.001) ** 0.25)

    def test_t_init_rule(self):
        obj = generate_qubo(12, 0).to_objective()
        s = SaSchedule().resolve(obj, np.random.default_rng(3))
        probes = np.random.default_rng(3).integers(0, 2, size=(100, 12), dtype=np.uint8)
        vals = obj.evaluate_batch(probes)
        assert s.t_init == pytest.approx(max(1.0, vals.max() - vals.min()))
        assert s.t_final == pytest.approx(1e-3 * s.t_init)
        flat = QuadraticObjective(np.full(4, 1e-3), np.zeros((4, 4)))
        assert SaSchedule().resolve(flat, 0).t_init == 1.0


class TestAnneal:
    def test_constant(self):
        obj = FunctionObjective(lambda x: 2.5, 6)
        x, v = anneal(obj, [1, 0, 1, 0, 1, 0], SaSchedule(sweeps=20), 0)
        assert v == 2.5

    def test_linear_all_zeros(self):
        obj = QuadraticObjective(np.ones(10), np.zeros((10, 10)))
        x, v = anneal(obj, np.ones(10, int), SaSchedule(sweeps=200, t_init=0.01), 1)
        np.testing.assert_array_equal(x, np.zeros(10))
        assert v == 0.0

    @given(st.integers(2, 10), st.integers(0, 10_000))
    def test_returned_value_is_fresh(self, d, seed):
        rng = np.random.default_rng(seed)
        for obj in random_objectives(d, seed)[:3]:
            init = rng.integers(0, 2, d)
            x, v = anneal(obj, init, SaSchedule(sweeps=30), seed)
            assert v == pytest.approx(obj.evaluate(x), abs=1e-9)

    @pytest.mark.parametrize("which", [0, 1, 2])
    def test_fast_equals_generic(self, which):
        obj = random_objectives(8, 5)[which]
        init = np.zeros(8, int)
        a = anneal(obj, init, SaSchedule(sweeps=50), 9, use_fast=True)
        b = anneal(obj, init, SaSchedule(sweeps=50), 9, use_fast=False)
        np.testing.assert_array_equal(a[0], b[0])
        assert a[1] == b[1]

    def test_best_visited_not_last(self):
        # hot chain wanders away from the optimum; the best visited point is still returned
        obj = QuadraticObjective(np.ones(6), np.zeros((6, 6)))
        x, v = anneal(obj, np.zeros(6, int), SaSchedule(sweeps=5, t_init=1e6, t_final=1e5), 0)
        assert v == 0.0

    def test_deterministic(self):
        obj = generate_qubo(12, 1).to_objective()
        a = anneal(obj, np.zeros(12, int), SaSchedule(sweeps=40), 5)
        b = anneal(obj, np.zeros(12, int), SaSchedule(sweeps=40), 5)
        np.testing.assert_array_equal(a[0], b[0])

    def test_non_finite(self):
        obj = FunctionObjective(lambda x: np.inf if x.sum() == 2 else float(x.sum()), 3)
        with pytest.raises(ValueError):
            anneal(obj, [1, 1, 0], SaSchedule(sweeps=5, t_init=1.0), 0)

    def test_dimension(self):
        with pytest.raises(DimensionMismatchError):
            anneal(generate_qubo(4, 0).to_objective(), [0, 1], SaSchedule(sweeps=2), 0)


class TestMultiRestart:
    def test_one_run_is_anneal(self):
        obj = generate_qubo(10, 2).to_objective()
        init = np.zeros(10, int)
        sched = SaSchedule(sweeps=30)
        x, v = multi_restart(obj, [init], 1, sched, 77)
        resolved = sched.resolve(obj, derive_rng(77, _PROBE_KEY))
        ax, av = anneal(obj, init, resolved, derive_rng(77, 0))
        np.testing.assert_array_equal(x, ax)
        assert v == av

    def test_min_reduction_and_prefix_monotone(self):
        obj = generate_hubo(10, 4).to_objective()
        inits = [np.zeros(10, int), np.ones(10, int)]
        sched = SaSchedule(sweeps=3)
        (x, v), runs = multi_restart(obj, inits, 10, sched, 5, return_all=True)
        assert v == min(r[1] for r in runs)
        prev = np.inf
        for r in range(1, 11):
            cur = multi_restart(obj, inits, r, sched, 5)[1]
            assert cur <= prev
            prev = cur

    def test_invalid(self):
        obj = generate_qubo(3, 0).to_objective()
        with pytest.raises(ValueError):
            multi_restart(obj, [[0, 0, 0]], 0)
        with pytest.raises(ValueError):
            multi_restart(obj, [], 2)

    def test_matches_exhaustive_small(self):
        hits = 0
        for seed in range(10):
            obj = generate_qubo(10, seed).to_objective()
            x, v = multi_restart(obj, [np.zeros(10, int)], 5, AnnealConfig(200).schedule(), seed)
            hits += v == pytest.approx(exhaustive_minimum(obj)[1], abs=1e-9)
        assert hits >= 9

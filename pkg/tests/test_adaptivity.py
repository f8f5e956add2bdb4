import numpy as np
import pytest

from boussinesq_afem.adaptivity import (
    ConvergenceRecord,
    adapt_loop,
    count_ndof,
    mark,
    rate_fit,
)
from boussinesq_afem.assembly import family_spaces
from boussinesq_afem.config import ProblemConfig
from boussinesq_afem.estimator import Indicators
from boussinesq_afem.mesh import build_initial_mesh


def indicators_from(values):
    sq = np.asarray(values, dtype=float) ** 2
    return Indicators(sq, np.zeros_like(sq))


def synthetic_records(ndofs, estimators):
    return [
        ConvergenceRecord(iteration=i, n_elements=n, n_vertices=n // 2,
                          ndof=n, estimator_total=e, estimator_ns=0.0,
                          estimator_heat=e, picard_iterations=1,
                          min_h_at_z=0.1)
        for i, (n, e) in enumerate(zip(ndofs, estimators))
    ]


class TestMark:
    def test_dominant_first(self):
        assert mark(indicators_from([4.0, 1.0, 1.0]), 0.5) == {0}

    def test_threshold_inclusive(self):
        assert mark(indicators_from([3.0, 2.0, 1.0]), 0.5) == {0, 1}

    def test_all_equal_marks_everything(self):
        assert mark(indicators_from([2.0, 2.0, 2.0]), 0.5) == {0, 1, 2}

    def test_scale_invariance(self):
        values = np.array([5.0, 3.0, 0.5, 2.9])
        base = mark(indicators_from(values), 0.5)
        scaled = mark(indicators_from(1e6 * values), 0.5)
        assert base == scaled

    def test_never_empty(self):
        rng = np.random.default_rng(9)
        for _ in range(25):
            values = rng.uniform(0, 1, size=rng.integers(1, 40))
            assert mark(indicators_from(values), 1.0)

    def test_invalid_fraction(self):
        with pytest.raises(ValueError):
            mark(indicators_from([1.0]), 0.0)


class TestRateFit:
    def test_inverse_decay(self):
        ndofs = [100 * 2**k for k in range(8)]
        recs = synthetic_records(ndofs, [10.0 / n for n in ndofs])
        assert rate_fit(recs) == pytest.approx(-1.0, abs=1e-12)

    def test_constant(self):
        ndofs = [100 * 2**k for k in range(8)]
        recs = synthetic_records(ndofs, [3.0] * 8)
        assert rate_fit(recs) == pytest.approx(0.0, abs=1e-12)

    def test_half_power(self):
        ndofs = [100 * 2**k for k in range(8)]
        recs = synthetic_records(ndofs, [5.0 / np.sqrt(n) for n in ndofs])
        assert rate_fit(recs) == pytest.approx(-0.5, abs=1e-12)

    def test_too_few_records(self):
        recs = synthetic_records([10, 20], [1.0, 0.5])
        with pytest.raises(ValueError):
            rate_fit(recs)


class TestAdaptLoop:
    def test_single_iteration(self):
        cfg = ProblemConfig(adapt_max=1)
        records = adapt_loop(cfg)
        assert len(records) == 1
        initial = build_initial_mesh(cfg.domain, cfg.resolved_initial_resolution())
        assert records[0].n_elements == initial.n_elements
        assert records[0].n_vertices == initial.n_vertices

    def test_ndof_accounting(self, square4):
        spaces = family_spaces(square4, "taylor_hood")
        velocity, pressure, temperature = spaces
        expected = (2 * (velocity.n_dofs - len(velocity.dirichlet_dofs))
                    + pressure.n_dofs
                    + temperature.n_dofs - len(temperature.dirichlet_dofs))
        assert count_ndof(spaces) == expected

    def test_monotone_growth_and_consistency(self):
        cfg = ProblemConfig(adapt_max=6, alpha=1.0)
        records = adapt_loop(cfg)
        assert len(records) == 6
        sizes = [r.ndof for r in records]
        assert all(a < b for a, b in zip(sizes, sizes[1:]))
        for r in records:
            assert r.estimator_total**2 == pytest.approx(
                r.estimator_ns**2 + r.estimator_heat**2, rel=1e-10)
            assert r.converged

    def test_element_budget_stops_early(self):
        cfg = ProblemConfig(adapt_max=12, alpha=1.0)
        records = adapt_loop(cfg, element_budget=30)
        assert 1 <= len(records) < 12
        assert records[-1].n_elements <= 30

    def test_on_iteration_callback(self):
        cfg = ProblemConfig(adapt_max=3, alpha=1.0)
        seen = []
        adapt_loop(cfg, on_iteration=lambda m, s, i, r: seen.append(r.iteration))
        assert seen == [0, 1, 2]

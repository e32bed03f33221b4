"""Tests for modular functionals and the decay experiments"""

import numpy as np
import pytest

from src.experiments.convergence import random_corpus
from src.models.grid import Grid, GridFunction
from src.models.lattice import OSequenceLadder
from src.models.modular import Measure, ModularSpec
from src.services.moment_ops import moment_values
from src.services.quadrature import integrate
from src.services.modulars import (
    check_axioms,
    dominated_decay,
    equi_ac_diagnostic,
    eval_modular,
    eventual_start,
    finiteness_scan,
    in_measure_table,
    uniform_table,
    vitali_decay,
)
from src.utils.errors import DomainError


@pytest.fixture
def modular_grid():
    return Grid.from_interval(0.5, 6.0, 1e-3)


@pytest.fixture
def w_prime(modular_grid):
    """Derivative of (t - 1)^2 (4 - t)^2 restricted to [1, 4]"""
    w = GridFunction.from_callable(
        modular_grid, lambda t: (t - 1) ** 2 * (4 - t) ** 2, support=(1.0, 4.0)
    )
    slope = w.with_values(np.gradient(w.values, modular_grid.h))
    return slope.restrict(1.0, 4.0)


def test_lebesgue_modular_of_indicator(modular_grid):
    f = GridFunction.from_callable(modular_grid, np.ones_like, support=(2.0, 3.0))
    assert eval_modular(ModularSpec.l1(), f) == pytest.approx(1.0, abs=1e-12)
    assert eval_modular(ModularSpec.l1(), f.scale(-2.0)) == pytest.approx(2.0, abs=1e-12)


def test_log_scale_modular(modular_grid):
    f = GridFunction.from_callable(modular_grid, np.ones_like, support=(1.0, 4.0))
    assert eval_modular(ModularSpec.l1(Measure.LOG_SCALE), f) == pytest.approx(np.log(4.0), abs=1e-6)


def test_log_scale_needs_positive_start():
    grid = Grid.from_interval(0.0, 1.0, 0.01)
    f = GridFunction.from_callable(grid, np.ones_like)
    with pytest.raises(DomainError):
        eval_modular(ModularSpec.l1(Measure.LOG_SCALE), f)


def test_weighted_deriv_needs_compact_weight(modular_grid):
    with pytest.raises(ValueError):
        ModularSpec(kind="weighted_deriv", w_prime=GridFunction.zeros_like(
            GridFunction(grid=modular_grid, values=np.zeros(modular_grid.n_points))
        ))


def test_callable_functionals_are_accepted(modular_grid):
    def sup_norm(f):
        return float(np.max(np.abs(f.values)))

    corpus = random_corpus(modular_grid, 8, seed=3)
    assert check_axioms(sup_norm, corpus).passed


def test_axioms_hold_for_lebesgue_on_random_corpus(modular_grid):
    corpus = random_corpus(modular_grid, 50, seed=20240917)
    report = check_axioms(ModularSpec.l1(), corpus, tolerance=1e-12)
    assert report.passed
    assert report.worst_violation <= 1e-12


def test_axioms_hold_for_weighted_deriv_on_random_corpus(modular_grid, w_prime):
    corpus = random_corpus(modular_grid, 50, seed=7)
    report = check_axioms(ModularSpec.weighted_deriv(w_prime), corpus, tolerance=1e-12)
    assert report.passed


def test_axiom_check_catches_a_non_modular(modular_grid):
    """f -> (int f)^2 + int f is not even"""
    corpus = random_corpus(modular_grid, 6, seed=1)
    report = check_axioms(lambda f: float(integrate(f)) ** 2 + float(integrate(f)), corpus)
    assert not report.passed


def test_check_axioms_rejects_empty_corpus():
    with pytest.raises(ValueError):
        check_axioms(ModularSpec.l1(), [])


def test_finiteness_scan_is_linear_for_lebesgue(modular_grid):
    scan = finiteness_scan(ModularSpec.l1(), modular_grid, (2.0, 3.0), OSequenceLadder.from_values([0.1, 0.01]))
    assert scan[0] == pytest.approx((0.1, 0.1))
    assert scan[1] == pytest.approx((0.01, 0.01))


def test_equi_ac_for_a_bounded_family(modular_grid):
    family = [GridFunction.from_callable(modular_grid, lambda t, k=k: np.sin(k * t)) for k in range(1, 5)]
    report = equi_ac_diagnostic(
        family,
        ModularSpec.l1(),
        alpha=1.0,
        small_sets=[(2.0, 2.5), (2.0, 2.1), (2.0, 2.001)],
        exhaustion=[(0.5, 5.0), (0.5, 5.9), (0.5, 6.0)],
        tolerance=1e-2,
    )
    assert report.passed
    assert report.exhaustion_table[-1][1] == 0.0


def test_equi_ac_rejects_non_positive_alpha(modular_grid):
    f = GridFunction.from_callable(modular_grid, np.sin)
    with pytest.raises(DomainError):
        equi_ac_diagnostic([f], ModularSpec.l1(), 0.0, [], [], 1e-3)


def test_vitali_decay_of_shrinking_family(modular_grid):
    base = GridFunction.from_callable(modular_grid, np.cos)
    family = [base.scale(1.0 / n) for n in range(1, 6)]
    table = vitali_decay(family, ModularSpec.l1())
    for alpha in (1.0, 1.0 / 3.0, 1.0 / 9.0):
        series = table.series(alpha)
        assert all(b < a for a, b in zip(series, series[1:]))
        assert eventual_start(series) == 0
    assert table.indices() == [1, 2, 3, 4, 5]


def test_dominated_decay_checks_domination(modular_grid):
    g = GridFunction.from_callable(modular_grid, lambda t: np.ones_like(t))
    inside = {n: g.scale(1.0 / n) for n in (1, 2, 4)}
    assert dominated_decay(inside, g, ModularSpec.l1()).series(1.0)[-1] == pytest.approx(5.5 / 4)
    with pytest.raises(DomainError):
        dominated_decay({1: g.scale(2.0)}, g, ModularSpec.l1())


def test_eventual_start():
    assert eventual_start([3.0, 2.0, 5.0, 4.0, 1.0]) == 2
    assert eventual_start([1.0, 2.0, 3.0]) == 2
    assert eventual_start([3.0, 2.0, 1.0]) == 0
    assert eventual_start([]) is None


def test_convergence_in_measure_and_uniform(modular_grid):
    limit = GridFunction.zeros_like(GridFunction(grid=modular_grid, values=np.zeros(modular_grid.n_points)))
    # spikes of height 1 on shrinking intervals [1, 1 + 1/n]
    family = {
        n: GridFunction.from_callable(modular_grid, np.ones_like, support=(1.0, 1.0 + 1.0 / n))
        for n in (1, 2, 4, 8)
    }
    measures = [m for _, m in in_measure_table(family, limit, 0.5, ModularSpec.l1())]
    assert measures == pytest.approx([1.0, 0.5, 0.25, 0.125], abs=2e-3)
    assert [u for _, u in uniform_table(family, limit)] == [1.0, 1.0, 1.0, 1.0]


@pytest.mark.parametrize("measure, size", [(Measure.LEBESGUE, np.e - 1.0), (Measure.LOG_SCALE, 1.0)])
def test_finiteness_scan_on_a_set_between_nodes(modular_grid, measure, size):
    """A = [1, e] does not end on a node"""
    scan = finiteness_scan(ModularSpec.l1(measure), modular_grid, (1.0, np.e), [1.0, 0.1, 0.01])
    assert [eps for eps, _ in scan] == [1.0, 0.1, 0.01]
    assert [value for _, value in scan] == pytest.approx([size, 0.1 * size, 0.01 * size], rel=1e-12)
    # the grid evaluation agrees up to the half cells at the ends
    nodes = modular_grid.nodes
    mask = GridFunction(grid=modular_grid, values=((nodes >= 1.0) & (nodes <= np.e)).astype(float))
    assert eval_modular(ModularSpec.l1(measure), mask) == pytest.approx(size, abs=2e-3)


def test_finiteness_scan_of_a_callable_functional(modular_grid):
    scan = finiteness_scan(lambda f: float(np.max(np.abs(f.values))), modular_grid, (1.0, np.e), [0.5])
    assert scan == [(0.5, 0.5)]


def test_equi_ac_fails_for_concentrating_spikes():
    """k 1_[0, 1/k] keeps unit mass on ever smaller sets"""
    grid = Grid.from_interval(0.0, 1.0, 1e-3)
    t = grid.nodes
    family = [
        GridFunction(grid=grid, values=np.where(t <= 1.0 / k, float(k), 0.0))
        for k in (1, 2, 5, 10, 50, 100, 200, 500)
    ]
    report = equi_ac_diagnostic(
        family,
        ModularSpec.l1(),
        alpha=1.0,
        small_sets=[(0.0, 0.5), (0.0, 0.1), (0.0, 0.01)],
        exhaustion=[(0.0, 1.0)],
        tolerance=1e-2,
    )
    assert not report.ac1_ok
    assert report.ac2_ok
    assert not report.passed
    assert all(sup >= 0.9 for _, sup in report.small_set_table)


def test_vitali_decay_of_moment_error(bump):
    """rho(alpha |T_n f - f|) shrinks along n for every alpha"""
    grid = Grid.from_interval(1e-3, 6.0, 1e-3)
    f_on = GridFunction(grid=grid, values=bump.evaluate_at(grid.nodes))
    family = {
        n: GridFunction(grid=grid, values=moment_values(bump, n, grid.nodes) - f_on.values)
        for n in (5, 20, 80, 320)
    }
    table = vitali_decay(family, ModularSpec.l1())
    for alpha in (1.0, 1.0 / 3.0, 1.0 / 9.0):
        series = table.series(alpha)
        assert all(later < earlier for earlier, later in zip(series, series[1:]))
        assert eventual_start(series) == 0


def test_weighted_deriv_scan_between_nodes(modular_grid, w_prime):
    """int_1^e |w'| = 2 w(2.5) - w(e) for w = (t - 1)^2 (4 - t)^2"""
    def w(t):
        return (t - 1) ** 2 * (4 - t) ** 2

    scan = finiteness_scan(ModularSpec.weighted_deriv(w_prime), modular_grid, (1.0, np.e), [1.0, 0.1])
    expected = 2 * w(2.5) - w(np.e)
    assert scan[0][1] == pytest.approx(expected, abs=1e-2)
    assert scan[1][1] == pytest.approx(0.1 * scan[0][1], rel=1e-12)

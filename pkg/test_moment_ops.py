"""Tests for the moment kernels and operators"""

import numpy as np
import pytest

from conftest import build_profile
from src.models.grid import Grid, GridFunction
from src.models.lattice import LatticeVector
from src.models.moment import InnerRule
from src.services.moment_ops import (
    bound_checks,
    consfubini_residual,
    default_eval_grid,
    derivative,
    kernel_eval,
    kernel_table,
    moment_values,
    ode_residual,
    ode_solve,
    recover_input,
    recupero_check,
    total_integral,
    transform,
    uniform_derivative_check,
    weak_convergence_experiment,
)
from src.services.profiles import builtin_profiles, get_profile
from src.services.quadrature import integrate
from src.utils.errors import ConfigError, DomainError, StructuralError

WINDOW = Grid.from_interval(0.5, 6.0, 1e-3)


def sup_error(f: GridFunction, n: int) -> float:
    T = transform(f, n, WINDOW, InnerRule.LINEAR_EXACT)
    return float(np.max(np.abs(T.output.values - f.evaluate_at(WINDOW.nodes))))


class TestKernel:
    def test_hand_values(self):
        assert kernel_eval(2, 0.5) == 0.5
        assert kernel_eval(3, 0.5) == pytest.approx(0.375)

    def test_vanishes_off_the_open_unit_interval(self):
        for w in (-0.5, 0.0, 1.0, 1.5):
            assert kernel_eval(4, w) == 0.0

    def test_order_must_be_positive(self):
        with pytest.raises(DomainError):
            kernel_eval(0, 0.5)

    def test_table(self):
        table = kernel_table(2, [0.0, 0.5, 1.0])
        assert table == [(0.0, 0.0), (0.5, 0.5), (1.0, 0.0)]


class TestProfiles:
    def test_closed_form_integrals(self):
        assert get_profile("indicator").integral(2.0, 3.0) == 1.0
        assert get_profile("bump").integral(2.0, 3.0) == pytest.approx(1.0 / 6.0)
        assert get_profile("zero").integral(2.0, 3.0) == 0.0

    @pytest.mark.parametrize("name", [p.name for p in builtin_profiles()])
    def test_numeric_integral_matches_closed_form(self, name):
        f = build_profile(name)
        assert float(integrate(f)) == pytest.approx(get_profile(name).integral(2.0, 3.0), abs=1e-6)

    def test_unknown_profile(self):
        with pytest.raises(ConfigError):
            get_profile("gaussian")


class TestTransform:
    def test_matches_closed_form_for_bump(self):
        f = build_profile("bump", a=1.5)
        T = transform(f, 50, default_eval_grid(f))
        exact = get_profile("bump").moment(50, T.output.nodes, 1.5, 3.0)
        assert np.max(np.abs(T.output.values - exact)) <= 1e-4
        assert T.s_max == pytest.approx(6.0)
        assert list(T.to_frame().columns) == ["s", "f", "Tn_f"]

    def test_constants_are_fixed_points(self):
        """T_n 1 = 1 on (0, b] when f starts at the origin"""
        f = build_profile("indicator", a=0.0)
        grid = Grid.from_interval(1e-3, 3.0, 1e-3)
        T = transform(f, 5, grid, InnerRule.LINEAR_EXACT)
        assert np.max(np.abs(T.output.values - 1.0)) <= 1e-12

    def test_ramp_is_scaled(self):
        """T_n t = n s / (n + 1) on (0, b]"""
        f = build_profile("ramp", a=0.0)
        grid = Grid.from_interval(1e-3, 3.0, 1e-3)
        T = transform(f, 4, grid, InnerRule.LINEAR_EXACT)
        assert np.max(np.abs(T.output.values - 0.8 * grid.nodes)) <= 1e-12

    def test_zero_and_origin(self, bump):
        assert moment_values(bump, 5, np.array([0.0, 1.0]))[0] == 0.0
        T = transform(build_profile("zero"), 7, default_eval_grid(bump))
        assert not np.any(T.output.values)

    def test_evaluation_grid_must_avoid_origin(self, bump, inner_grid):
        with pytest.raises(DomainError):
            transform(bump, 3, inner_grid)

    def test_support_must_be_declared(self, inner_grid):
        f = GridFunction.from_callable(inner_grid, np.sin)
        with pytest.raises(StructuralError):
            transform(f, 3, default_eval_grid(build_profile("bump")))

    def test_large_order_is_rescaled_instead_of_overflowing(self):
        """n ln(b/a) far beyond the double range still gives T_n f close to f"""
        f = build_profile("bump", a=1.5)
        T = transform(f, 2000, default_eval_grid(f), InnerRule.LINEAR_EXACT)
        assert np.all(np.isfinite(T.output.values))
        assert T.K_n is None
        assert np.max(np.abs(T.output.values - f.evaluate_at(T.output.nodes))) <= 1e-2

    def test_rescaled_orders_match_closed_form(self, bump):
        """n = 2000 needs several anchors on [2, 3], n = 400 only one"""
        for n in (400, 2000):
            T = transform(bump, n, default_eval_grid(bump), InnerRule.LINEAR_EXACT)
            exact = get_profile("bump").moment(n, T.output.nodes, 2.0, 3.0)
            assert np.max(np.abs(T.output.values - exact)) <= 1e-6

    def test_tail_meets_grid_branch_at_b(self, bump):
        """n K_n / b^n agrees with the quadrature value at the node s = b"""
        T = transform(bump, 10, default_eval_grid(bump))
        at_b = T.output.values[T.output.grid.index_of(3.0)]
        tail = 10 * float(T.K_n) / 3.0 ** 10
        assert at_b == pytest.approx(tail, rel=1e-12)
        assert float(T.scaled_moment) * 10 / 3.0 == pytest.approx(at_b, rel=1e-12)

    @pytest.mark.parametrize("name", ["indicator", "bump", "ramp"])
    @pytest.mark.parametrize("rule", list(InnerRule))
    def test_non_negative_input_stays_non_negative(self, name, rule):
        f = build_profile(name, a=1.5)
        for n in (1, 5, 50):
            assert np.all(transform(f, n, default_eval_grid(f), rule).output.values >= 0)

    def test_lattice_valued_input_is_componentwise(self, bump):
        sine = build_profile("sin")
        stacked = GridFunction(
            grid=bump.grid, values=np.stack([bump.values, sine.values], axis=1), support_hint=(2.0, 3.0)
        )
        grid = default_eval_grid(bump)
        T = transform(stacked, 5, grid)
        assert isinstance(T.K_n, LatticeVector)
        assert np.array_equal(T.output.values[:, 0], transform(bump, 5, grid).output.values)
        assert np.array_equal(T.output.values[:, 1], transform(sine, 5, grid).output.values)


class TestIdentities:
    @pytest.mark.parametrize("name", ["indicator", "bump", "sin"])
    @pytest.mark.parametrize("n", [2, 3, 5, 10])
    def test_total_integral_identity(self, name, n):
        assert consfubini_residual(build_profile(name), n) <= 1e-4

    def test_bump_n3_residual_is_tiny(self, bump):
        assert consfubini_residual(bump, 3) <= 1e-5

    def test_identity_residual_is_second_order_in_h(self):
        coarse = consfubini_residual(build_profile("bump", h=0.02), 3)
        fine = consfubini_residual(build_profile("bump", h=0.01), 3)
        assert coarse >= 3 * fine

    def test_total_integral_needs_n_above_one(self, bump):
        T = transform(bump, 1, default_eval_grid(bump))
        with pytest.raises(DomainError):
            total_integral(T)

    def test_total_integral_needs_grid_before_support(self, bump):
        T = transform(bump, 3, Grid.from_interval(2.5, 6.0, 1e-3))
        with pytest.raises(StructuralError):
            total_integral(T)

    def test_derivative_identity(self, bump):
        check = recupero_check(transform(bump, 5, default_eval_grid(bump)))
        assert check.passed
        assert check.max_deviation <= 1e-3

    def test_derivative_deviation_shrinks_with_h(self):
        coarse = build_profile("bump", h=1e-3)
        fine = build_profile("bump", h=5e-4)
        dev_coarse = recupero_check(transform(coarse, 5, default_eval_grid(coarse))).max_deviation
        dev_fine = recupero_check(transform(fine, 5, default_eval_grid(fine))).max_deviation
        assert dev_coarse >= 3 * dev_fine

    def test_input_is_recovered_from_transform(self, bump):
        T = transform(bump, 5, default_eval_grid(bump))
        recovered = recover_input(T)
        s = T.output.nodes
        inside = (s > 2.01) & (s < 2.99)
        assert np.max(np.abs(recovered.values[inside] - bump.evaluate_at(s[inside]))) <= 1e-4
        assert derivative(T).grid.same_as(T.output.grid)

    def test_uniform_derivative_deviation_is_monotone(self, bump):
        report = uniform_derivative_check(transform(bump, 5, default_eval_grid(bump)))
        assert report.passed
        assert [r.delta for r in report.rows] == sorted((r.delta for r in report.rows), reverse=True)


class TestBounds:
    @pytest.mark.parametrize("name", ["indicator", "bump", "sin"])
    @pytest.mark.parametrize("n", [2, 5, 10])
    def test_lipschitz_tail_and_equi_ac(self, name, n):
        f = build_profile(name, a=1.5)
        report = bound_checks(transform(f, n, default_eval_grid(f)), pair_samples=10_000, seed=20240917)
        assert report.lipschitz_ok
        assert report.lipschitz_witness is None
        assert report.tail_ok
        assert report.equi_ac_ok
        assert report.tail_mass_beyond_2b <= report.equi_ac_tail

    def test_tail_bound_for_every_order(self):
        f = build_profile("bump", a=1.5)
        for n in range(2, 11):
            assert bound_checks(transform(f, n, default_eval_grid(f)), pair_samples=100).tail_ok

    def test_uniform_error_decreases(self, bump):
        assert sup_error(bump, 200) < sup_error(bump, 5)
        assert sup_error(bump, 400) < 1e-2

    def test_l1_error_decays(self, bump):
        def l1(n):
            return bound_checks(transform(bump, n, default_eval_grid(bump)), pair_samples=100).l1_error

        assert l1(100) < l1(5) / 5
        assert l1(200) < 1e-2

    def test_modulus_bound_dominates_uniform_error(self, bump):
        # the bump is 1-Lipschitz, so |x - y| <= 0.05 gives |f(x) - f(y)| <= 0.05
        report = bound_checks(transform(bump, 50, default_eval_grid(bump)), pair_samples=100, modulus=(0.05, 0.05))
        assert report.uniform_error <= report.uniform_error_bound

    def test_n_one_is_rejected(self, bump):
        with pytest.raises(DomainError):
            bound_checks(transform(bump, 1, default_eval_grid(bump)))


class TestOde:
    def test_constant_input_is_exact(self):
        f = build_profile("indicator")
        s = WINDOW.nodes
        phi = ode_solve(1.0, f, 0.0, WINDOW, InnerRule.LINEAR_EXACT)
        exact = np.where(s < 2.0, 0.0, np.where(s <= 3.0, 1.0 - 2.0 / s, 1.0 / s))
        assert np.max(np.abs(phi.values - exact)) <= 1e-12
        assert ode_residual(phi, 1.0, f, margin=(2.0, 3.0)) <= 1e-3

    def test_ramp_input_is_exact(self):
        f = build_profile("ramp")
        s = WINDOW.nodes
        phi = ode_solve(2.0, f, 0.0, WINDOW, InnerRule.LINEAR_EXACT)
        exact = np.where(
            s < 2.0, 0.0, np.where(s <= 3.0, 2.0 * (s ** 3 - 8.0) / (3.0 * s ** 2), 38.0 / (3.0 * s ** 2))
        )
        assert np.max(np.abs(phi.values - exact)) <= 1e-12
        assert ode_residual(phi, 2.0, f, margin=(2.0, 3.0)) <= 1e-3

    def test_bump_residual(self, bump):
        phi = ode_solve(3.0, bump, 0.0, WINDOW)
        assert ode_residual(phi, 3.0, bump, margin=(2.0, 3.0)) <= 1e-3

    def test_homogeneous_term(self):
        phi = ode_solve(2.0, build_profile("zero"), 1.5, WINDOW)
        assert np.allclose(phi.values, 1.5 * WINDOW.nodes ** -2.0, rtol=1e-14, atol=0)

    @pytest.mark.parametrize("rule", list(InnerRule))
    def test_integer_nu_reproduces_the_transform(self, bump, rule):
        for n in (2, 5, 20):
            phi = ode_solve(float(n), bump, 0.0, WINDOW, rule)
            T = transform(bump, n, WINDOW, rule)
            assert np.allclose(phi.values, T.output.values, rtol=0, atol=1e-12)

    def test_nu_must_be_positive(self, bump):
        with pytest.raises(DomainError):
            ode_solve(0.0, bump, 0.0, WINDOW)


def test_weak_convergence_decreases(bump):
    grid = Grid.from_interval(0.0, 6.0, 1e-3)
    w = GridFunction.from_callable(grid, lambda t: (t - 1) ** 2 * (4 - t) ** 2, support=(1.0, 4.0))
    table = weak_convergence_experiment(bump, w, [5, 20, 80])
    assert table.passed
    assert table.rows[-1].delta_weak < table.rows[0].delta_weak
    assert list(table.to_frame().columns) == ["n", "delta_weak", "delta_stieltjes"]


def test_weak_convergence_must_end_below_tolerance(bump):
    grid = Grid.from_interval(0.0, 6.0, 1e-3)
    w = GridFunction.from_callable(grid, lambda t: (t - 1) ** 2 * (4 - t) ** 2, support=(1.0, 4.0))
    table = weak_convergence_experiment(bump, w, [5, 20, 80], tolerance=1e-6)
    assert table.decreasing
    assert not table.last_within_tolerance
    assert not table.passed


def test_weak_convergence_of_zero_input():
    grid = Grid.from_interval(0.0, 6.0, 1e-3)
    w = GridFunction.from_callable(grid, lambda t: (t - 1) ** 2 * (4 - t) ** 2, support=(1.0, 4.0))
    table = weak_convergence_experiment(build_profile("zero"), w, [5, 20], tolerance=1e-12)
    assert [r.delta_weak for r in table.rows] == [0.0, 0.0]
    assert table.passed

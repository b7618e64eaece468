import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kpzlab import shape
from kpzlab.shape import (BranchCrossingError, DomainError, ShapeParams,
                          ShapePoint)

SP22 = ShapeParams(1.0, 2.0)
SP11 = ShapeParams(1.0, 1.0)
SP15 = ShapeParams(1.0, 1.5)


class TestEvalF:
    def test_lower_branch_at_i(self):
        val = shape.eval_F(1j, (-1.0, 2.0), SP22)
        assert val == pytest.approx(complex(math.log(2), 1 + math.pi),
                                    abs=1e-14)

    def test_upper_branch_imag_part(self):
        val = shape.eval_F(2 + 1j, (2.5, 1.25), SP11)
        expected = 1 + math.pi / 4 + math.pi / 8 - 3.75 * math.atan(0.5)
        assert val.imag == pytest.approx(expected, abs=1e-14)

    @given(re=st.floats(-2, 3), im=st.floats(0.1, 2.5),
           xi=st.floats(-1, 3), mu=st.floats(0.2, 2.5))
    @settings(max_examples=60, deadline=None)
    def test_schwarz_reflection(self, re, im, xi, mu):
        z = complex(re, im)
        f_up = shape.eval_F(z, (xi, mu), SP15)
        f_dn = shape.eval_F(z.conjugate(), (xi, mu), SP15)
        assert f_dn == pytest.approx(f_up.conjugate(), rel=1e-12, abs=1e-12)

    def test_branch_point_rejected(self):
        with pytest.raises(ZeroDivisionError):
            shape.eval_F(0, (0.5, 1.0), SP11)
        with pytest.raises(ZeroDivisionError):
            shape.eval_F(2, (0.5, 1.5), SP11)


class TestOmega:
    def test_quadratic_point(self):
        assert shape.omega((-1.0, 2.0), SP22) == pytest.approx(1j, abs=1e-12)

    def test_cubic_point(self):
        assert shape.omega((2.5, 1.25), SP11) == pytest.approx(2 + 1j,
                                                               abs=1e-12)

    def test_outside_returns_none(self):
        assert shape.omega((10.0, 0.1), SP11) is None

    def test_inverse_examples(self):
        p = shape.inverse_omega(1j, SP22)
        assert (p.xi, p.mu) == pytest.approx((-1.0, 2.0), abs=1e-12)
        p = shape.inverse_omega(2 + 1j, SP11)
        assert (p.xi, p.mu) == pytest.approx((2.5, 1.25), abs=1e-12)

    def test_inverse_rejects_lower_half_plane(self):
        with pytest.raises(DomainError):
            shape.inverse_omega(1 - 1j, SP11)

    def test_roundtrip_on_grid(self):
        worst = 0.0
        for a in np.linspace(-1, 4, 30):
            for b in np.linspace(0.05, 3, 30):
                w = complex(a, b)
                w2 = shape.omega(shape.inverse_omega(w, SP11), SP11)
                worst = max(worst, abs(w2 - w))
        assert worst <= 1e-10

    def test_critical_point_residual(self):
        for a in np.linspace(-1, 4, 12):
            for b in np.linspace(0.1, 3, 12):
                p = shape.inverse_omega(complex(a, b), SP15)
                w = shape.omega(p, SP15)
                assert abs(shape._dF(w, p, SP15)) <= 1e-12

    def test_branch_agreement_on_separating_line(self):
        # at mu = mu0 the cubic factors as the quadratic times (z - 2)
        for xi in np.linspace(-0.5, 2.0, 9):
            p_low = ShapePoint(xi, SP15.mu0)
            w_low = shape.omega(p_low, SP15)
            if w_low is None:
                continue
            coeffs = [SP15.tau, -3 * SP15.tau - xi,
                      2 * SP15.tau - SP15.mu0 + 2 * SP15.mu0 + 3 * xi,
                      -2 * (xi + SP15.mu0)]
            roots = [r for r in np.roots(coeffs) if r.imag > 1e-12]
            assert len(roots) == 1
            assert abs(roots[0] - w_low) <= 1e-10

    def test_in_domain(self):
        assert shape.in_domain((-1.0, 2.0), SP22)
        assert not shape.in_domain((10.0, 0.1), SP11)


class TestBoundary:
    def test_named_points(self):
        sp = ShapeParams(1.0, 1.5)
        pts = {w: (xi, mu) for (w, xi, mu, _) in
               shape.boundary_curve(sp, 7, 0.0, 2.0)}
        assert pts[0.0] == pytest.approx((-1.0, 1.0), abs=1e-12)
        assert pts[1.0] == pytest.approx((1.0, 0.0), abs=1e-12)

    def test_cusp_birth_point(self):
        # at the critical time tau = mu0 the point w=2 maps to (3 mu0, mu0)
        for mu0 in (0.7, 1.0, 1.5):
            sp = ShapeParams(mu0, mu0)
            out = shape.boundary_point(2.0, sp)
            assert out[0] == pytest.approx(3 * mu0, abs=1e-12)
            assert out[1] == pytest.approx(mu0, abs=1e-12)

    def test_double_critical_point_residuals(self):
        sp = SP15
        for (w, xi, mu, _) in shape.boundary_curve(sp, 41, -1.5, 3.5):
            if mu <= 0 or w in (0.0, 1.0, 2.0) or abs(mu - sp.mu0) < 1e-9:
                continue
            p = ShapePoint(xi, mu)
            assert abs(shape._dF(w + 0j, p, sp)) <= 1e-12
            assert abs(shape.eval_F2(w + 0j, p, sp)) <= 1e-12

    def test_needs_two_samples(self):
        with pytest.raises(ValueError):
            shape.boundary_curve(SP11, 1)

    def test_support_right_edge_matches_boundary(self):
        sp = SP15
        for (w, xi, mu, br) in shape.boundary_curve(sp, 31, 2.3, 6.0):
            if br == "high":
                assert shape.support_right_edge(mu, sp) == pytest.approx(
                    xi, rel=1e-6)


class TestLimitHeight:
    def test_symbolic_value(self):
        assert shape.limit_height((-1.0, 2.0), SP22) == pytest.approx(
            (1 + math.pi) / math.pi, abs=1e-12)

    def test_outside_raises(self):
        with pytest.raises(DomainError):
            shape.limit_height((10.0, 0.1), SP11)

    def test_frozen_conventions(self):
        assert shape.limit_height_or_frozen((-5.0, 2.0), SP15) == 2.0
        assert shape.limit_height_or_frozen((9.0, 0.5), SP15) == 0.0

    def test_continuous_across_separating_line(self):
        sp = SP15
        for xi in (0.2, 0.8, 1.4):
            below = shape.limit_height((xi, sp.mu0 - 1e-7), sp)
            above = shape.limit_height((xi, sp.mu0 + 1e-7), sp)
            assert abs(below - above) <= 1e-6

    def test_normal_jumps_across_separating_line(self):
        sp = SP15
        n_below = shape.surface_normal((0.8, sp.mu0 - 1e-7), sp)
        n_above = shape.surface_normal((0.8, sp.mu0 + 1e-7), sp)
        assert abs(n_below[1] - n_above[1]) > 1e-3


class TestNormalAndDensity:
    def test_triangle_angles_lower(self):
        n = shape.surface_normal((-1.0, 2.0), SP22)
        assert n == pytest.approx((0.5, -0.25, 1.0), abs=1e-12)

    def test_triangle_angles_upper(self):
        n = shape.surface_normal((2.5, 1.25), SP11)
        assert n[0] == pytest.approx(math.atan(0.5) / math.pi, abs=1e-12)
        assert n[1] == pytest.approx(-math.atan(2) / math.pi, abs=1e-12)
        assert n[2] == 1.0

    def test_normal_equals_height_gradient(self):
        sp = SP15
        h = 1e-5
        for p in [(-0.2, 1.0), (1.2, 0.7), (2.2, 1.9)]:
            n1, n2, _ = shape.surface_normal(p, sp)
            dh_xi = (shape.limit_height((p[0] + h, p[1]), sp)
                     - shape.limit_height((p[0] - h, p[1]), sp)) / (2 * h)
            dh_mu = (shape.limit_height((p[0], p[1] + h), sp)
                     - shape.limit_height((p[0], p[1] - h), sp)) / (2 * h)
            assert n1 == pytest.approx(-dh_xi, abs=1e-8)
            assert n2 == pytest.approx(-dh_mu, abs=1e-8)

    def test_density_values(self):
        assert shape.density((-1.0, 2.0), SP22) == pytest.approx(0.5)
        assert shape.density((2.5, 1.25), SP11) == pytest.approx(
            math.atan(0.5) / math.pi)

    def test_density_strictly_inside_unit_interval(self):
        for a in np.linspace(-0.8, 3.5, 10):
            for b in np.linspace(0.1, 2.5, 10):
                p = shape.inverse_omega(complex(a, b), SP15)
                assert 0.0 < shape.density(p, SP15) < 1.0


class TestJacobian:
    def test_closed_form_lower_branch(self):
        assert shape.jacobian((-1.0, 2.0), SP22) == pytest.approx(0.25,
                                                                  abs=1e-12)

    def test_analytic_vs_finite_difference(self):
        sp = SP15
        for a in np.linspace(0.2, 1.8, 5):
            for b in np.linspace(0.3, 1.0, 4):
                w = complex(a, b)
                if abs(w - 1) ** 2 > sp.mu0 / sp.tau:
                    continue  # stay on the closed-form branch
                p = shape.inverse_omega(w, sp)
                analytic = shape.jacobian(p, sp)
                fd = shape._jacobian_fd(p, sp, 1e-6)
                assert fd == pytest.approx(analytic, abs=1e-6)

    def test_positive_on_interior_grid(self):
        count = 0
        for a in np.linspace(-0.5, 3.0, 10):
            for b in np.linspace(0.2, 2.0, 10):
                p = shape.inverse_omega(complex(a, b), SP15)
                assert shape.jacobian(p, SP15) > 0
                count += 1
        assert count == 100


class TestBurgersAndPDE:
    def test_residual_small_lower_branch(self):
        res = shape.burgers_residual((-1.0, 2.0), ShapeParams(1.0, 3.0), 1e-5)
        assert abs(res) <= 1e-8

    def test_residual_small_upper_branch(self):
        res = shape.burgers_residual((2.5, 1.25), SP11, 1e-5)
        assert abs(res) <= 1e-8

    def test_finite_difference_order(self):
        p, sp = (0.4, 1.1), ShapeParams(1.0, 3.0)
        r1 = abs(shape.burgers_residual(p, sp, 1e-4))
        r2 = abs(shape.burgers_residual(p, sp, 5e-5))
        order = math.log(r1 / r2) / math.log(2.0)
        assert order >= 1.8

    def test_stencil_crossing_rejected(self):
        with pytest.raises(BranchCrossingError):
            shape.burgers_residual((0.8, SP15.mu0), SP15, 1e-5)
        with pytest.raises(BranchCrossingError):
            shape.pde_residual((0.8, SP15.mu0 + 1e-7), SP15, 1e-5)

    def test_kpz_f_values(self):
        assert shape.kpz_f(0.3, 0.3) == pytest.approx(0.0, abs=1e-15)
        assert shape.kpz_f(0.0, 0.7) == 0.0
        assert shape.kpz_f(-0.5, 0.25) == pytest.approx(1 / math.pi,
                                                        abs=1e-14)

    def test_kpz_f_pole(self):
        with pytest.raises(ZeroDivisionError):
            shape.kpz_f(0.3, 1.0)

    def test_pde_residual_lower(self):
        res = shape.pde_residual((-1.0, 2.0), ShapeParams(1.0, 3.0), 1e-4)
        assert abs(res) <= 1e-6

    def test_pde_residual_upper(self):
        res = shape.pde_residual((2.5, 1.25), SP11, 1e-4)
        assert abs(res) <= 1e-6

    def test_pde_residual_shrinks_with_step(self):
        p, sp = (0.4, 1.1), ShapeParams(1.0, 3.0)
        big = abs(shape.pde_residual(p, sp, 2e-4))
        small = abs(shape.pde_residual(p, sp, 1e-4))
        assert small < big


class TestParamValidation:
    def test_bad_params(self):
        with pytest.raises(ValueError):
            ShapeParams(0.0, 1.0)
        with pytest.raises(ValueError):
            ShapeParams(1.0, -1.0)
        with pytest.raises(ValueError):
            ShapePoint(0.0, 0.0)

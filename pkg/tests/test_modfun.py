import numpy as np
import pytest

from fadeid.fracpoly import Polynomial, rl_derivative
from fadeid.modfun import build_family, evaluate_on_grid
from fadeid.estimator import trapezoid


@pytest.fixture(scope="module")
def fam():
    return build_family(3, 3, 9.0)


class TestBuildFamily:
    def test_first_member_expansion(self, fam):
        # phi_1 = x^6 (9-x)^4
        expect = Polynomial.monomial(6) * Polynomial((9.0, -1.0)) ** 4
        assert fam.members[0].coeffs == expect.coeffs
        assert fam.members[0].degree == 10

    def test_shared_degree(self, fam):
        assert all(m.degree == fam.degree == 10 for m in fam.members)

    def test_boundary_vanishing(self, fam):
        for m in fam.members:
            assert m(0.0) == 0.0
            assert abs(m(9.0)) <= 1e-12 * abs(m(4.5))

    def test_first_derivative_vanishes_at_endpoints(self, fam):
        d2 = fam.members[1].derivative()
        scale = np.abs(d2(np.linspace(0, 9, 101))).max()
        assert abs(d2(0.0)) <= 1e-13 * scale
        assert abs(d2(9.0)) <= 1e-13 * scale

    @pytest.mark.parametrize("args", [(1, 3, 9.0), (3, 1, 9.0), (3, 3, 0.0), (3, 3, -2.0)])
    def test_invalid_parameters(self, args):
        with pytest.raises(ValueError):
            build_family(*args)

    def test_factored_powers_recorded(self, fam):
        assert fam.powers == ((6, 4), (5, 5), (4, 6))


class TestEvaluateOnGrid:
    def test_integer_order_matches_second_derivative(self, fam):
        ge = evaluate_on_grid(fam, 2.0, 301)
        for m, row in zip(fam.members, ge.dalpha_phi):
            ref = m.derivative().derivative()(ge.x)
            np.testing.assert_allclose(row, ref, rtol=1e-10, atol=1e-10 * np.abs(ref).max())

    def test_fractional_rows_vanish_at_origin(self, fam):
        ge = evaluate_on_grid(fam, 1.8, 101)
        assert np.all(ge.dalpha_phi[:, 0] == 0.0)
        assert np.all(ge.dalpha_dalpha_phi[:, 0] == 0.0)

    def test_phi_rows_vanish_at_endpoints(self, fam):
        ge = evaluate_on_grid(fam, 1.5, 101)
        for row in ge.phi:
            assert abs(row[0]) <= 1e-15 * np.abs(row).max()
            assert abs(row[-1]) <= 1e-15 * np.abs(row).max()

    def test_sensitivity_row_finite_difference(self, fam):
        alpha, h = 1.8, 1e-5
        M = 101
        ge = evaluate_on_grid(fam, alpha, M)
        gp = evaluate_on_grid(fam, alpha + h, M)
        gm = evaluate_on_grid(fam, alpha - h, M)
        fd = (gp.dalpha_phi - gm.dalpha_phi) / (2 * h)
        for got, ref in zip(ge.dalpha_dalpha_phi, fd):
            assert np.abs(got - ref).max() <= 1e-6 * np.abs(got).max()

    def test_grid_spacing(self, fam):
        ge = evaluate_on_grid(fam, 1.5, 10)
        assert ge.dx == pytest.approx(1.0)
        assert len(ge.x) == 10

    @pytest.mark.parametrize("alpha,M", [(1.0, 101), (2.1, 101), (1.5, 2)])
    def test_invalid_arguments(self, fam, alpha, M):
        with pytest.raises(ValueError):
            evaluate_on_grid(fam, alpha, M)

    def test_dphi_matches_polynomial_derivative(self, fam):
        ge = evaluate_on_grid(fam, 1.5, 77)
        for m, row in zip(fam.members, ge.dphi_dx):
            ref = m.derivative()(ge.x)
            np.testing.assert_allclose(row, ref, rtol=1e-9, atol=1e-9 * np.abs(ref).max())


class TestFractionalIntegrationByParts:
    """Both integrands are bounded for test functions with min power >= 2."""

    @pytest.mark.parametrize("alpha", [1.2, 1.5, 1.8, 2.0])
    def test_identity_on_regular_test_function(self, alpha):
        L1, M = 9.0, 10001
        fam = build_family(3, 3, L1)
        f = Polynomial((0.0, 0.0, L1, -1.0))  # x^2 (L1 - x)
        x = np.linspace(0.0, L1, M)
        dx = x[1] - x[0]
        df = rl_derivative(f, alpha)
        for member in fam.members:
            left = trapezoid(member.shift_reflect(L1)(x) * df(x), dx)
            right = trapezoid(rl_derivative(member, alpha)(x) * f(L1 - x), dx)
            assert abs(left - right) <= 1e-4 * abs(right)

    def test_identity_other_interval_length(self):
        L1, M, alpha = 5.0, 10001, 1.7
        fam = build_family(4, 3, L1)
        f = Polynomial((0.0, 0.0, 0.0, 1.0, -0.1))
        x = np.linspace(0.0, L1, M)
        dx = x[1] - x[0]
        df = rl_derivative(f, alpha)
        for member in fam.members:
            left = trapezoid(member.shift_reflect(L1)(x) * df(x), dx)
            right = trapezoid(rl_derivative(member, alpha)(x) * f(L1 - x), dx)
            assert abs(left - right) <= 1e-4 * abs(right)

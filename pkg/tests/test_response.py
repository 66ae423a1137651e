import numpy as np
import pytest

from circle_response import FourierVector, ResponseContext, perturb
from circle_response.fourier import TWO_PI, forward_dft, grid, l2_inner
from circle_response.optimizer import optimal_eigenvalue_perturbation, optimal_expectation_perturbation
from circle_response.response import (
    density_response,
    derivative_op_apply,
    derivative_op_apply_expanded,
    eigenvalue_response,
    expectation_response,
    observable,
)
from circle_response.transfer import assemble, invariant_density

from conftest import band_limited


@pytest.fixture(scope="module")
def dbl_ctx(doubling):
    return ResponseContext.build(doubling, 64)


@pytest.fixture(scope="module")
def sticky256(sticky):
    return ResponseContext.build(sticky, 256, derivative="spectral")


class TestDerivativeOperator:
    def test_zero_perturbation(self, sticky_ctx):
        out = derivative_op_apply(sticky_ctx, sticky_ctx.f0, FourierVector.zeros(512))
        assert not out.coeffs.any()

    def test_odd_harmonic_annihilated(self, dbl_ctx):
        one = FourierVector.mode(64, 0)
        t = FourierVector.from_trig(64, sin=[1 / TWO_PI])
        for ctx in (dbl_ctx, dbl_ctx.with_derivative("spectral")):
            assert np.abs(derivative_op_apply(ctx, one, t).coeffs).max() < 1e-14

    def test_doubling_second_harmonic(self, dbl_ctx):
        one = FourierVector.mode(64, 0)
        t = FourierVector.from_trig(64, sin=[0.0, 1.0])
        # f T'/T0' = sin(4 pi x)/2, derivative 2 pi cos(4 pi x), L maps cos(4 pi x) to cos(2 pi x)
        expected = forward_dft(-TWO_PI * np.cos(TWO_PI * grid(64)))
        spectral = dbl_ctx.with_derivative("spectral")
        assert np.abs(derivative_op_apply(spectral, one, t).coeffs - expected.coeffs).max() < 1e-12
        # central differences see the symbol sin(4 pi / N) N / (4 pi) instead of 1
        factor = np.sin(2 * TWO_PI / 64) * 64 / (2 * TWO_PI)
        assert np.abs(derivative_op_apply(dbl_ctx, one, t).coeffs - factor * expected.coeffs).max() < 1e-12
        for ctx in (dbl_ctx, spectral):
            compact = derivative_op_apply(ctx, one, t)
            assert np.abs(derivative_op_apply_expanded(ctx, one, t).coeffs - compact.coeffs).max() < 1e-10

    def test_constant_perturbation_term_dropout(self, dbl_ctx, rng):
        f = band_limited(rng, 64, 6)
        one = FourierVector.mode(64, 0)
        expected = -(dbl_ctx.Lhat @ forward_dft(dbl_ctx.diff(f.samples()) / 2))
        out = derivative_op_apply_expanded(dbl_ctx, f, one)
        assert np.abs(out.coeffs - expected.coeffs).max() < 1e-12

    def test_expanded_matches_compact(self, sticky256, rng):
        for _ in range(20):
            f, t = band_limited(rng, 256, 8), band_limited(rng, 256, 8)
            a = derivative_op_apply(sticky256, f, t)
            b = derivative_op_apply_expanded(sticky256, f, t)
            assert np.abs(a.coeffs - b.coeffs).max() <= 1e-9

    @pytest.mark.parametrize("mode", ["central", "spectral"])
    def test_mean_zero(self, sticky_ctx, rng, mode):
        ctx = sticky_ctx.with_derivative(mode)
        for _ in range(5):
            f, t = band_limited(rng, 512, 30), band_limited(rng, 512, 30)
            assert abs(derivative_op_apply(ctx, f, t).mean) <= 1e-9

    def test_size_mismatch(self, sticky_ctx):
        with pytest.raises(ValueError):
            derivative_op_apply(sticky_ctx, FourierVector.zeros(64), FourierVector.zeros(512))


class TestDensityResponse:
    def test_zero(self, sticky_ctx):
        assert not density_response(sticky_ctx, FourierVector.zeros(512)).coeffs.any()

    def test_linearity(self, sticky_ctx, rng):
        u, v = band_limited(rng, 512, 5), band_limited(rng, 512, 5)
        a, b = 0.7, -2.1
        lhs = density_response(sticky_ctx, u * a + v * b)
        rhs = density_response(sticky_ctx, u) * a + density_response(sticky_ctx, v) * b
        assert np.abs(lhs.coeffs - rhs.coeffs).max() <= 1e-10 * max(1.0, np.abs(rhs.coeffs).max())

    def test_mean_zero_and_real(self, sticky_ctx, rng):
        R = density_response(sticky_ctx, band_limited(rng, 512, 4))
        assert R.mean == 0 and R.is_real()

    def test_rotation_of_doubling_map(self, dbl_ctx):
        # rotating the doubling map keeps Lebesgue measure invariant
        assert np.abs(density_response(dbl_ctx, FourierVector.mode(64, 0)).coeffs).max() < 1e-12

    def test_complex_perturbation_rejected(self, sticky_ctx):
        with pytest.raises(ValueError):
            density_response(sticky_ctx, FourierVector.mode(512, 2))


class TestExpectationResponse:
    def test_constant_observable(self, sticky_ctx, rng):
        c = observable("const", 512)
        assert expectation_response(sticky_ctx, c, band_limited(rng, 512, 4)) == pytest.approx(0.0, abs=1e-15)

    def test_zero_perturbation(self, sticky_ctx):
        assert expectation_response(sticky_ctx, observable("cos", 512), FourierVector.zeros(512)) == 0.0

    def test_matches_difference_quotient(self, sticky, sticky_ctx):
        c = observable("cos", 512)
        t = optimal_expectation_perturbation(sticky_ctx, c, 1.0).tdot
        value = expectation_response(sticky_ctx, c, t)
        d = 1e-3
        f_d = invariant_density(assemble(perturb(sticky, t, d), 512))
        quotient = (l2_inner(f_d, c) - l2_inner(sticky_ctx.f0, c)).real / d
        assert value > 0
        assert quotient == pytest.approx(value, rel=5e-2)

    def test_equals_pairing_of_density_response(self, sticky_ctx, rng):
        c, t = observable("sin2", 512), band_limited(rng, 512, 3)
        R = density_response(sticky_ctx, t)
        assert expectation_response(sticky_ctx, c, t) == pytest.approx(l2_inner(R, c).real, rel=1e-14)


class TestEigenvalueResponse:
    def test_zero(self, gap_ctx):
        assert eigenvalue_response(gap_ctx, FourierVector.zeros(512)) == 0.0

    def test_linearity(self, gap_ctx, rng):
        u, v = band_limited(rng, 512, 5), band_limited(rng, 512, 5)
        lhs = eigenvalue_response(gap_ctx, u * 2.0 - v * 0.5)
        rhs = 2.0 * eigenvalue_response(gap_ctx, u) - 0.5 * eigenvalue_response(gap_ctx, v)
        assert lhs == pytest.approx(rhs, abs=1e-10)

    def test_optimal_value(self, gap_ctx):
        t = optimal_eigenvalue_perturbation(gap_ctx, 1.0).tdot
        assert eigenvalue_response(gap_ctx, t) == pytest.approx(0.5758, rel=5e-2)

    def test_requires_eigen_data(self, sticky_ctx):
        with pytest.raises(ValueError):
            eigenvalue_response(sticky_ctx, FourierVector.mode(512, 0))


class TestContext:
    def test_invariants(self, gap_ctx):
        assert gap_ctx.residual() <= 1e-8
        assert abs(gap_ctx.eigen.phi0.mean - 1) <= 1e-8
        assert abs(gap_ctx.eigen.pairing(gap_ctx.eigen.v0) - 1) <= 1e-8

    def test_tprime_modes(self, sticky_ctx):
        exact = sticky_ctx.map.derivative_on_grid(512)
        central = sticky_ctx.tprime
        assert np.abs(central - exact).max() < 1e-4
        assert np.array_equal(sticky_ctx.with_derivative("spectral").tprime, exact)

    def test_bad_mode(self, sticky_ctx):
        with pytest.raises(ValueError):
            sticky_ctx.with_derivative("forward")


@pytest.mark.parametrize("name,k,fn", [("cos", 1, np.cos), ("sin3", 3, np.sin)])
def test_named_observables(name, k, fn):
    x = np.linspace(0, 1, 13)
    assert np.allclose(observable(name, 32).evaluate(x), fn(TWO_PI * k * x))


def test_unknown_observable():
    with pytest.raises(ValueError):
        observable("tan", 32)

import numpy as np
import pytest
import scipy.linalg as sla

from circle_response import FourierVector, SpectralGapError, UnsupportedEigenvalueError
from circle_response.adjoint import EigenData, adjoint_representative, eigen_data, h1_pairing, normalize_pair
from circle_response.fourier import h1_weights
from circle_response.response import derivative_op_apply, eigenvalue_response
from circle_response.transfer import TransferMatrix, assemble, eigenpair


@pytest.fixture(scope="module")
def L_doubling(doubling):
    return assemble(doubling, 64)


class TestRepresentative:
    def test_doubling_lebesgue(self, L_doubling):
        phi = adjoint_representative(L_doubling, 1.0)
        assert np.abs(phi.coeffs - FourierVector.mode(64, 0).coeffs).max() < 1e-12

    @pytest.mark.parametrize("name", ["sticky", "gapmap_smooth"])
    def test_fixed_functional_is_lebesgue(self, name, request):
        m = request.getfixturevalue(name)
        phi = adjoint_representative(assemble(m, 128), 1.0)
        assert np.abs(phi.coeffs - FourierVector.mode(128, 0).coeffs).max() < 1e-8

    def test_defining_property(self, gap_ctx):
        eig = gap_ctx.eigen
        N = gap_ctx.N
        worst = 0.0
        for n in range(-N // 2 + 1, N // 2 + 1, 7):
            e = FourierVector.mode(N, n)
            r = h1_pairing(eig.phi0, gap_ctx.Lhat @ e) - eig.lambda0 * h1_pairing(eig.phi0, e)
            worst = max(worst, abs(r))
        assert worst <= 1e-8
        assert eig.adjoint_residual(gap_ctx.Lhat) <= 1e-8

    def test_normalisation(self, gap_ctx):
        eig = gap_ctx.eigen
        assert abs(eig.phi0.mean - 1.0) < 1e-10
        assert abs(eig.pairing(eig.v0) - 1.0) < 1e-8
        assert eig.v0.is_real(1e-12) and eig.phi0.is_real(1e-12)
        L = gap_ctx.Lhat
        assert np.linalg.norm((L @ eig.v0).coeffs - eig.lambda0 * eig.v0.coeffs) <= 1e-8

    def test_annihilates_invariant_density(self, gap_ctx):
        # phi0(f0) = phi0(L f0) = lambda0 phi0(f0) forces phi0(f0) = 0
        assert abs(gap_ctx.eigen.pairing(gap_ctx.f0)) < 1e-8

    def test_two_plateaus(self, gap_ctx):
        eig = gap_ctx.eigen
        v, p = eig.v0.samples(1024).real, eig.phi0.samples(1024).real
        high, low = p[v > 0.5 * v.max()].mean(), p[v < 0.5 * v.min()].mean()
        assert abs(high - low) > 0.2

    def test_weights_cancel(self, gap_ctx):
        # plain left eigenvector of L and the standard perturbation formula
        eig = gap_ctx.eigen
        L = gap_ctx.Lhat.matrix
        ev, U = sla.eig(L.T)
        u = U[:, np.argmin(np.abs(ev - eig.lambda0))]
        tdot = FourierVector.from_trig(gap_ctx.N, 0.3, [0.01, -0.02], [0.015])
        Ld_v = derivative_op_apply(gap_ctx, eig.v0, tdot)
        plain = (u @ Ld_v.coeffs) / (u @ eig.v0.coeffs)
        assert plain.real == pytest.approx(eigenvalue_response(gap_ctx, tdot), rel=1e-8)

    def test_complex_rejected(self, gap_ctx):
        with pytest.raises(UnsupportedEigenvalueError):
            adjoint_representative(gap_ctx.Lhat, 0.5 + 0.1j)

    def test_absent_eigenvalue(self, gap_ctx):
        with pytest.raises(SpectralGapError):
            adjoint_representative(gap_ctx.Lhat, 0.9)

    def test_repeated_eigenvalue(self):
        M = np.diag(np.r_[np.zeros(7), 1.0, 0.5, 0.5, np.zeros(6)]).astype(complex)
        with pytest.raises(SpectralGapError):
            adjoint_representative(TransferMatrix(M), 0.5)


class TestNormalizePair:
    def test_doubling(self, L_doubling):
        one = FourierVector.mode(64, 0)
        e = normalize_pair(L_doubling, 1.0, one * 7.0, one)
        assert np.abs(e.v0.coeffs - one.coeffs).max() < 1e-15

    @pytest.mark.parametrize("alpha", [-3.0, 0.01, 250.0])
    def test_scale_invariance(self, gap_ctx, alpha):
        eig = gap_ctx.eigen
        a = normalize_pair(gap_ctx.Lhat, eig.lambda0, eig.v0 * alpha, eig.phi0 * (1 / alpha))
        assert np.abs(a.v0.coeffs - eig.v0.coeffs).max() < 1e-12
        assert np.abs(a.phi0.coeffs - eig.phi0.coeffs).max() < 1e-12

    def test_idempotent(self, gap_ctx):
        eig = gap_ctx.eigen
        again = normalize_pair(gap_ctx.Lhat, eig.lambda0, eig.v0, eig.phi0)
        assert np.abs(again.v0.coeffs - eig.v0.coeffs).max() < 1e-14

    def test_degenerate_pairing(self, L_doubling):
        one = FourierVector.mode(64, 0)
        v = FourierVector.mode(64, 3)
        with pytest.raises(Exception, match="degenerate"):
            normalize_pair(L_doubling, 1.0, v, one)


def test_csv_export(gap_ctx, tmp_path):
    gap_ctx.eigen.to_csv(tmp_path / "e.csv", 64)
    lines = (tmp_path / "e.csv").read_text().splitlines()
    assert lines[0] == "x,v0,phi0" and len(lines) == 65


def test_eigen_data_matches_eigenpair(gap_ctx):
    lam, _ = eigenpair(gap_ctx.Lhat, 0.7)
    e = eigen_data(gap_ctx.Lhat, 0.7)
    assert isinstance(e, EigenData) and e.lambda0 == pytest.approx(lam.real, abs=1e-14)

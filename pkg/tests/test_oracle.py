import json
import math

import numpy as np
import pytest

from circle_response import FourierVector, preset
from circle_response.exceptions import SpectralGapError
from circle_response.fourier import TWO_PI
from circle_response.optimizer import optimal_eigenvalue_perturbation, optimal_expectation_perturbation
from circle_response.oracle import (
    FDReport,
    fd_density_response,
    fd_eigenvalue_response,
    l1_distance,
    track_eigenvalue,
    ulam_density,
    ulam_matrix,
)
from circle_response.response import ResponseContext, observable
from circle_response.transfer import assemble, invariant_density


class TestFDReport:
    def test_orders(self):
        r = FDReport("density", [1e-2, 5e-3, 2.5e-3], [4e-4, 2e-4, 1e-4])
        assert r.orders == pytest.approx([1.0, 1.0]) and r.passed()

    def test_stalled_errors_fail(self):
        r = FDReport("density", [1e-2, 5e-3, 2.5e-3], [4e-4, 3.9e-4, 3.8e-4])
        assert not r.passed()
        assert not FDReport("density", [1e-2, 5e-3], [1e-4, 2e-4]).passed()

    def test_trivial(self):
        r = FDReport("density", [1e-2, 5e-3], [0.0, 0.0])
        assert r.trivial and r.passed() and math.isnan(r.estimated_order)
        assert json.loads(r.to_json())["estimated_order"] is None

    @pytest.mark.parametrize("deltas", [[], [1e-2, 1e-2], [1e-3, 1e-2], [-1e-2]])
    def test_bad_deltas(self, deltas):
        with pytest.raises(ValueError):
            FDReport("density", deltas, [1.0] * len(deltas))

    def test_non_finite(self):
        with pytest.raises(ValueError):
            FDReport("density", [1e-2], [math.nan])

    def test_json_roundtrip(self, tmp_path):
        r = FDReport("density", [1e-2, 5e-3], [2e-4, 1e-4], extra={"a": 1.0})
        d = json.loads(r.to_json(tmp_path / "fd.json"))
        assert d["passed"] and d["errors"] == [2e-4, 1e-4]
        assert json.loads((tmp_path / "fd.json").read_text()) == d


class TestDensityFD:
    def test_zero_perturbation_trivial(self, sticky):
        r = fd_density_response(sticky, FourierVector.zeros(128), N=128)
        assert r.trivial and r.passed()

    def test_doubling_rotation(self, doubling):
        t = FourierVector.from_trig(128, sin=[1 / TWO_PI])
        r = fd_density_response(doubling, t, N=128)
        assert r.passed() and r.estimated_order == pytest.approx(1.0, abs=0.1)

    def test_sticky_optimal(self, sticky, sticky_ctx):
        t = optimal_expectation_perturbation(sticky_ctx, observable("cos", 512), 1.0).tdot
        r = fd_density_response(sticky, t, ctx=sticky_ctx.with_derivative("spectral"))
        assert r.errors[2] < r.errors[0] / 2
        assert r.passed()

    def test_corrupted_formula_detected(self, sticky, sticky_ctx):
        t = optimal_expectation_perturbation(sticky_ctx, observable("cos", 512), 1.0).tdot
        ctx = sticky_ctx.with_derivative("spectral")
        from circle_response.response import density_response

        r = fd_density_response(sticky, t, ctx=ctx, formula=density_response(ctx, t) * -1.0)
        assert not r.passed()


@pytest.fixture(scope="module")
def spectral_gap_ctx(gap_ctx):
    # the eigenvalue formula is not resolved at N = 256 (about 10% off), so use 512
    return gap_ctx.with_derivative("spectral")


class TestEigenFD:

    def test_small_steps_agree(self, spectral_gap_ctx):
        ctx = spectral_gap_ctx
        t = optimal_eigenvalue_perturbation(ctx, 1.0).tdot
        r = fd_eigenvalue_response(ctx.map, 0.7, t, [1e-4, 1e-5], ctx=ctx)
        assert r.quotient_values[-1] == pytest.approx(r.formula_value, rel=5e-3)
        assert r.extra["central_quotients"][-1] == pytest.approx(r.formula_value, rel=5e-3)
        assert r.errors[1] < r.errors[0]

    def test_zero_perturbation(self, spectral_gap_ctx):
        ctx = spectral_gap_ctx
        r = fd_eigenvalue_response(ctx.map, 0.7, FourierVector.zeros(512), ctx=ctx)
        assert r.trivial

    def test_ambiguous_tracking(self):
        with pytest.raises(SpectralGapError):
            track_eigenvalue(np.array([0.5, 0.70000001, 0.69999999]), 0.7)
        assert track_eigenvalue(np.array([0.5, 0.7, 0.1]), 0.69) == 0.7


class TestUlam:
    def test_doubling_uniform(self, doubling):
        edges, v = ulam_density(doubling, 4096)
        assert np.abs(v - 1).max() < 1e-12

    def test_row_stochastic(self, sticky):
        P = ulam_matrix(sticky, np.linspace(0, 1, 513))
        assert np.abs(np.asarray(P.sum(axis=1)).ravel() - 1).max() < 1e-12
        assert P.min() >= 0

    def test_matches_fourier_density(self, sticky, sticky_ctx):
        edges, v = ulam_density(sticky, 2**14)
        mids = 0.5 * (edges[1:] + edges[:-1])
        f = sticky_ctx.f0.evaluate(mids).real
        assert np.sum(np.abs(v - f) * np.diff(edges)) < 1e-3

    def test_markov_partition_exact(self, gapmap):
        edges = np.unique(np.concatenate([gapmap.breakpoints, [0.0, 1.0]]))
        e, v = ulam_density(gapmap, edges=edges)
        f0 = invariant_density(assemble(gapmap, 256))
        mids = 0.5 * (e[1:] + e[:-1])
        # the invariant density is constant on the partition cells
        assert np.sum(v * np.diff(e)) == pytest.approx(1.0, abs=1e-12)
        assert np.abs(f0.evaluate(mids).real - v).max() < 0.05

    def test_too_few_bins(self, doubling):
        with pytest.raises(ValueError):
            ulam_density(doubling, 1024)

    def test_bad_edges(self, doubling):
        with pytest.raises(ValueError):
            ulam_density(doubling, edges=[0.0, 0.6, 0.5, 1.0])


def test_l1_distance():
    u = FourierVector.from_trig(16, 1.0)
    v = FourierVector.from_trig(16, 1.0, cos=[1.0])
    assert l1_distance(u, v, 1024) == pytest.approx(2 / np.pi, rel=1e-5)

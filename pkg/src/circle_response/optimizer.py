"""Closed-form optimal map perturbations.

Both responses are continuous linear functionals of ``tdot``.  Writing
``tdot = sum_n a_n e_n``, each is ``Re sum_n conj(a_n) q_n`` for per-frequency
numerators ``q_n``.  Maximising over the unit ball of the weighted H^4 norm
``sum_n w_n(gamma) |a_n|^2`` gives

    a_n = q_n / (2 nu w_n),    nu = sqrt(sum_n |q_n|^2 / w_n) / 2,

with optimal value ``2 nu``.
"""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass

import numpy as np

from .exceptions import NumericalError
from .fourier import FourierVector, frequencies, grid, h1_weights, sobolev_norm, sobolev_weight
from .response import ResponseContext, eigenvalue_response, expectation_response

__all__ = [
    "OptimizationResult",
    "expectation_numerators",
    "eigenvalue_numerators",
    "optimal_expectation_perturbation",
    "optimal_eigenvalue_perturbation",
    "optimal_from_numerators",
    "objective_certificate",
    "CertificateReport",
    "DEGENERATE_TOL",
]

DEGENERATE_TOL = 1e-14


@dataclass(frozen=True, eq=False)
class OptimizationResult:
    """Optimal perturbation for one weight ``gamma``.

    ``numerators`` are the conjugate-symmetrised per-frequency numerators the
    coefficients were built from; ``symmetry_defect`` is how far the raw
    numerators were from conjugate symmetry.
    """

    tdot: FourierVector
    nu: float
    gamma: float
    objective: float
    numerators: np.ndarray
    kind: str = "expectation"
    degenerate: bool = False
    symmetry_defect: float = 0.0
    sign_flipped: bool = False

    @property
    def weights(self) -> np.ndarray:
        return sobolev_weight(self.tdot.freqs, 4, self.gamma)

    def constraint(self) -> float:
        """Weighted H^4 norm of ``tdot`` (1 unless degenerate)."""
        return sobolev_norm(self.tdot, 4, self.gamma)

    def stationarity_residual(self) -> float:
        """``max |q_n - 2 nu w_n a_n| / max |q_n|``."""
        q = self.numerators
        scale = np.abs(q).max()
        if scale == 0.0:
            return 0.0
        return float(np.abs(q - 2 * self.nu * self.weights * self.tdot.coeffs).max() / scale)

    def to_dict(self) -> dict:
        a = self.tdot.coeffs
        return {
            "kind": self.kind,
            "gamma": float(self.gamma),
            "nu": float(self.nu),
            "objective": float(self.objective),
            "degenerate": bool(self.degenerate),
            "coefficients": [[int(n), float(z.real), float(z.imag)] for n, z in zip(self.tdot.freqs, a)],
        }

    def to_json(self, path=None) -> str:
        text = json.dumps(self.to_dict(), indent=1)
        if path is not None:
            with open(path, "w") as fh:
                fh.write(text + "\n")
        return text

    def to_csv(self, path, resolution: int = 1024) -> None:
        x = grid(resolution)
        y = self.tdot.samples(resolution).real
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["x", "tdot"])
            for xi, yi in zip(x, y):
                w.writerow([repr(float(xi)), repr(float(yi))])


def _basis_rows(N: int) -> np.ndarray:
    n = frequencies(N)
    return np.exp(2j * np.pi * np.outer(n, grid(N)))


def _lhat_b_rows(ctx: ResponseContext, f: FourierVector) -> np.ndarray:
    """Row ``n`` holds ``L_0 applied to [e_n f / T_0']'``."""
    rows = _basis_rows(ctx.N) * (f.samples() / ctx.tprime)[None, :]
    return ctx.apply_rows(ctx.transform_rows(ctx.diff(rows)))


def expectation_numerators(ctx: ResponseContext, c: FourierVector) -> np.ndarray:
    """``int c conj(y_n)`` with ``y_n = (I - L_0)^{-1} L_0([e_n f_0 / T_0']')``.

    All ``N`` right-hand sides share one factorisation.
    """
    if c.size != ctx.N:
        raise ValueError(f"size mismatch: expected {ctx.N}, got {c.size}")
    Y = ctx.resolvent.solve(_lhat_b_rows(ctx, ctx.f0))
    return np.conj(Y) @ c.coeffs


def eigenvalue_numerators(ctx: ResponseContext) -> np.ndarray:
    """``-phi_0(g_n)``-type numerators with ``g_n = L_0((e_n v_0 / T')')``."""
    eig = ctx.require_eigen()
    G = _lhat_b_rows(ctx, eig.v0)
    return -(np.conj(G) @ (eig.phi0.coeffs * h1_weights(ctx.N)))


def _symmetrise(q: np.ndarray) -> tuple[np.ndarray, float]:
    v = FourierVector(q)
    return v.real_part().coeffs.copy(), v.symmetry_defect()


def optimal_from_numerators(q: np.ndarray, gamma: float) -> tuple[FourierVector, float, bool]:
    """Coefficients maximising ``Re sum conj(a_n) q_n`` on the weighted unit ball."""
    N = q.size
    if np.abs(q).max() < DEGENERATE_TOL:
        return FourierVector.zeros(N), 0.0, True
    w = sobolev_weight(frequencies(N), 4, gamma)
    nu = 0.5 * np.sqrt(np.sum(np.abs(q) ** 2 / w))
    return FourierVector(q / (2 * nu * w)), float(nu), False


def optimal_expectation_perturbation(ctx: ResponseContext, c: FourierVector, gamma: float = 1.0) -> OptimizationResult:
    """Unit-norm ``tdot`` maximising the response of ``int c f``."""
    if not c.is_real(1e-10):
        raise ValueError("observable must be real-valued")
    q, defect = _symmetrise(expectation_numerators(ctx, c))
    a, nu, degenerate = optimal_from_numerators(q, gamma)
    if degenerate:
        return OptimizationResult(a, 0.0, gamma, 0.0, q, "expectation", True, defect)
    value = expectation_response(ctx, c, a)
    flipped = value < 0
    # the numerators as written give the minimiser; orient towards the maximum
    if flipped:
        q, a, value = -q, -a, -value
    return OptimizationResult(a, nu, gamma, value, q, "expectation", False, defect, flipped)


def optimal_eigenvalue_perturbation(ctx: ResponseContext, gamma: float = 1.0) -> OptimizationResult:
    """Unit-norm ``tdot`` maximising ``d lambda / d delta``."""
    q, defect = _symmetrise(eigenvalue_numerators(ctx))
    a, nu, degenerate = optimal_from_numerators(q, gamma)
    if degenerate:
        return OptimizationResult(a, 0.0, gamma, 0.0, q, "eigenvalue", True, defect)
    value = eigenvalue_response(ctx, a)
    if value <= 0:
        raise NumericalError(f"optimal eigenvalue response is not positive ({value:.3g})")
    return OptimizationResult(a, nu, gamma, value, q, "eigenvalue", False, defect)


@dataclass(frozen=True)
class CertificateReport:
    trials: int
    max_ratio: float
    objective: float
    responses: tuple

    @property
    def passed(self) -> bool:
        return all(r <= self.objective + 1e-9 for r in self.responses)


def random_unit_direction(N: int, gamma: float, rng: np.random.Generator) -> FourierVector:
    """Random real perturbation of unit weighted H^4 norm.

    Coefficients decay like ``w_n^{-1/2}`` so that every scale contributes.
    """
    n = frequencies(N)
    w = sobolev_weight(n, 4, gamma)
    z = (rng.standard_normal(N) + 1j * rng.standard_normal(N)) / np.sqrt(w)
    u = FourierVector(z).real_part()
    return u / sobolev_norm(u, 4, gamma)


def objective_certificate(ctx: ResponseContext, result: OptimizationResult, trials: int = 100,
                          seed: int = 0, c: FourierVector | None = None) -> CertificateReport:
    """Check that random unit directions never beat the optimum.

    Responses are evaluated with the response formulas, not the numerators.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if result.kind == "expectation":
        if c is None:
            raise ValueError("the observable is required for an expectation certificate")
        response = lambda u: expectation_response(ctx, c, u)  # noqa: E731
    else:
        response = lambda u: eigenvalue_response(ctx, u)  # noqa: E731
    rng = np.random.default_rng(seed)
    vals = tuple(response(random_unit_direction(ctx.N, result.gamma, rng)) for _ in range(trials))
    ratio = max(vals) / result.objective if result.objective > 0 else float("inf")
    report = CertificateReport(trials, float(ratio), result.objective, vals)
    if not report.passed:
        raise NumericalError(f"a random direction beats the optimum (ratio {ratio:.6g})")
    return report

"""Linear response of the invariant density and of an isolated eigenvalue.

For a perturbation ``T_delta = T_0 + delta * tdot`` the derivative operator is

    Ldot(f) = -L_0( [f tdot / T_0']' ),

the density response is ``R(tdot) = (I - L_0)^{-1} Ldot(f_0)`` and the
eigenvalue response is ``phi_0(Ldot(v_0))``.  All pointwise work happens on
the N-grid; derivatives use a circular central difference by default
(``derivative="central"``) or exact spectral differentiation
(``derivative="spectral"``).
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .adjoint import EigenData, eigen_data, h1_pairing
from .circle_map import CircleMap
from .exceptions import NumericalError
from .fourier import (
    TWO_PI,
    FourierVector,
    circular_central_difference,
    forward_dft,
    frequencies,
    grid,
    l2_inner,
)
from .transfer import Resolvent, TransferMatrix, assemble, invariant_density

__all__ = [
    "ResponseContext",
    "derivative_op_apply",
    "derivative_op_apply_expanded",
    "density_response",
    "expectation_response",
    "eigenvalue_response",
    "observable",
]

DERIVATIVES = ("central", "spectral")


def _spectral_diff(samples):
    s = np.asarray(samples)
    M = s.shape[-1]
    k = np.fft.fftfreq(M, 1.0 / M)
    k[M // 2] = 0.0  # odd derivative of the Nyquist mode vanishes on the grid
    return np.fft.ifft(np.fft.fft(s, axis=-1) * (TWO_PI * 1j * k), axis=-1)


@dataclass(frozen=True, eq=False)
class ResponseContext:
    """Everything the response formulas need about the unperturbed map.

    Use :meth:`build` rather than the constructor.
    """

    map: CircleMap
    Lhat: TransferMatrix
    f0: FourierVector
    eigen: EigenData | None = None
    derivative: str = "central"

    def __post_init__(self):
        if self.derivative not in DERIVATIVES:
            raise ValueError(f"derivative must be one of {DERIVATIVES}")
        if self.f0.size != self.Lhat.N:
            raise ValueError("density and matrix sizes differ")

    @classmethod
    def build(cls, map_: CircleMap, N: int = 512, fine_factor: int = 8,
              eigen_target: float | None = None, derivative: str = "central") -> ResponseContext:
        Lhat = assemble(map_, N, fine_factor)
        f0 = invariant_density(Lhat)
        eigen = eigen_data(Lhat, eigen_target) if eigen_target is not None else None
        return cls(map_, Lhat, f0, eigen, derivative)

    def with_derivative(self, derivative: str) -> ResponseContext:
        return ResponseContext(self.map, self.Lhat, self.f0, self.eigen, derivative)

    @property
    def N(self) -> int:
        return self.Lhat.N

    def diff(self, samples) -> np.ndarray:
        """Derivative of N-grid samples along the last axis."""
        if self.derivative == "central":
            return circular_central_difference(samples)
        return _spectral_diff(samples)

    @cached_property
    def tprime(self) -> np.ndarray:
        """``T_0'`` on the N-grid.

        The central mode differentiates the sampled lift with the same central
        difference used everywhere else; the spectral mode uses the map's own
        derivative.
        """
        if self.derivative == "central":
            p = self.map.periodic_on_grid(self.N)
            return self.map.degree + circular_central_difference(p)
        return self.map.derivative_on_grid(self.N, 1)

    @cached_property
    def tsecond(self) -> np.ndarray:
        if self.derivative == "central":
            return circular_central_difference(self.tprime)
        return self.map.derivative_on_grid(self.N, 2)

    @cached_property
    def resolvent(self) -> Resolvent:
        return Resolvent(self.Lhat)

    def residual(self) -> float:
        """``||L f0 - f0||``."""
        return float(np.linalg.norm(self.Lhat.matrix @ self.f0.coeffs - self.f0.coeffs))

    def require_eigen(self) -> EigenData:
        if self.eigen is None:
            raise ValueError("this context carries no eigenvalue data (pass eigen_target)")
        return self.eigen

    def transform_rows(self, samples) -> np.ndarray:
        """Forward DFT of each row of N-grid samples, in storage order."""
        n = frequencies(self.N)
        return (np.fft.fft(samples, axis=-1) / self.N)[..., n % self.N]

    def apply_rows(self, coeffs) -> np.ndarray:
        """``L`` applied to each row of a coefficient array."""
        return coeffs @ self.Lhat.matrix.T


def _check(ctx, *vectors):
    for v in vectors:
        if v.size != ctx.N:
            raise ValueError(f"size mismatch: expected {ctx.N}, got {v.size}")


def derivative_op_apply(ctx: ResponseContext, f: FourierVector, tdot: FourierVector) -> FourierVector:
    """``Ldot(f) = -L_0([f tdot / T_0']')`` for the perturbation ``tdot``."""
    _check(ctx, f, tdot)
    g = f.samples() * tdot.samples() / ctx.tprime
    dg = forward_dft(ctx.diff(g))
    return FourierVector(-(ctx.Lhat.matrix @ dg.coeffs))


def derivative_op_apply_expanded(ctx: ResponseContext, f: FourierVector, tdot: FourierVector) -> FourierVector:
    """Product-rule form of :func:`derivative_op_apply`:

    ``-L(f tdot'/T') - L(tdot f'/T') + L(tdot T'' f / T'^2)``.
    """
    _check(ctx, f, tdot)
    fs, ts = f.samples(), tdot.samples()
    tp, tpp = ctx.tprime, ctx.tsecond
    h = -fs * ctx.diff(ts) / tp - ts * ctx.diff(fs) / tp + ts * tpp * fs / tp**2
    return FourierVector(ctx.Lhat.matrix @ forward_dft(h).coeffs)


def density_response(ctx: ResponseContext, tdot: FourierVector) -> FourierVector:
    """``R(tdot) = -(I - L_0)^{-1} L_0([f_0 tdot / T_0']')``, a mean-zero function."""
    if not tdot.is_real(1e-10):
        raise ValueError("tdot must be real-valued")
    return ctx.resolvent.solve(derivative_op_apply(ctx, ctx.f0, tdot)).real_part()


def _real(z, tol, what):
    z = complex(z)
    if abs(z.imag) > tol * max(1.0, abs(z.real)):
        raise NumericalError(f"{what} has imaginary part {z.imag:.3g}")
    return z.real


def expectation_response(ctx: ResponseContext, c: FourierVector, tdot: FourierVector) -> float:
    """Rate of change ``int c R(tdot)`` of the expectation of the observable ``c``."""
    _check(ctx, c)
    R = density_response(ctx, tdot)
    return _real(l2_inner(R, c), 1e-9, "expectation response")


def eigenvalue_response(ctx: ResponseContext, tdot: FourierVector) -> float:
    """``d lambda / d delta = phi_0(Ldot(v_0))`` using the H^1 representative of ``phi_0``.

    Equivalent to ``-int phi_0 conj(g) - int phi_0' conj(g')`` with
    ``g = L_0((tdot v_0 / T')')``.
    """
    eig = ctx.require_eigen()
    if not tdot.is_real(1e-10):
        raise ValueError("tdot must be real-valued")
    g = derivative_op_apply(ctx, eig.v0, tdot)
    return _real(h1_pairing(eig.phi0, g), 1e-8, "eigenvalue response")


def observable(name: str, N: int) -> FourierVector:
    """Observables by name: ``cos``, ``sin``, ``cosK``, ``sinK`` or ``const``."""
    m = re.fullmatch(r"(cos|sin)(\d*)", name)
    if name in ("const", "constant", "one"):
        return FourierVector.mode(N, 0)
    if not m:
        raise ValueError(f"unknown observable {name!r}")
    k = int(m.group(2) or 1)
    x = grid(N)
    fn = np.cos if m.group(1) == "cos" else np.sin
    return forward_dft(fn(TWO_PI * k * x)).real_part()

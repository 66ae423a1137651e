"""H^1 representative of the adjoint eigenfunctional.

A functional ``phi`` on H^1 is represented by a function ``phi_0`` through

    phi(f) = int phi_0 conj(f) + int phi_0' conj(f')
           = sum_m a_m(phi_0) conj(f_m) (1 + 4 pi^2 m^2).

Asking ``phi(L e_n) = lambda phi(e_n)`` for every stored frequency turns
``conj(a)`` into a right eigenvector of the scaled transpose
``M[n, p] = L[p, n] (1 + 4 pi^2 p^2) / (1 + 4 pi^2 n^2)``.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .exceptions import NumericalError, SpectralGapError, UnsupportedEigenvalueError
from .fourier import FourierVector, grid, h1_weights
from .transfer import GAP_TOL, TransferMatrix, eigenpair, real_eigenvector, real_structured_eig

__all__ = ["EigenData", "h1_pairing", "adjoint_representative", "normalize_pair", "eigen_data"]


def h1_pairing(phi0: FourierVector, f: FourierVector) -> complex:
    """``int phi0 conj(f) + int phi0' conj(f')``."""
    if phi0.size != f.size:
        raise ValueError(f"size mismatch: {phi0.size} vs {f.size}")
    return complex(np.sum(phi0.coeffs * np.conj(f.coeffs) * h1_weights(f.size)))


@dataclass(frozen=True, eq=False)
class EigenData:
    """Isolated real eigenvalue with ``phi0(1) = 1`` and ``phi0(v0) = 1``."""

    lambda0: float
    v0: FourierVector
    phi0: FourierVector

    def pairing(self, f: FourierVector) -> complex:
        return h1_pairing(self.phi0, f)

    def adjoint_residual(self, Lhat: TransferMatrix) -> float:
        """``max_n |phi0(L e_n) - lambda0 phi0(e_n)|``."""
        w = h1_weights(Lhat.N)
        u = np.conj(self.phi0.coeffs) * w  # phi0(g) = conj(u . g)
        return float(np.abs(u @ Lhat.matrix - self.lambda0 * u).max())

    def to_csv(self, path, resolution: int = 1024) -> None:
        x = grid(resolution)
        v = self.v0.samples(resolution).real
        p = self.phi0.samples(resolution).real
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["x", "v0", "phi0"])
            for row in zip(x, v, p):
                w.writerow([repr(float(c)) for c in row])


def adjoint_representative(Lhat: TransferMatrix, lambda0: float) -> FourierVector:
    """Representative ``phi0`` with ``phi0(L f) = lambda0 phi0(f)`` and mean 1."""
    if abs(np.imag(lambda0)) > 1e-8:
        raise UnsupportedEigenvalueError("only real eigenvalues are supported")
    lambda0 = float(np.real(lambda0))
    w = h1_weights(Lhat.N)
    M = Lhat.matrix.T * w[None, :] / w[:, None]
    ev, V = real_structured_eig(M)
    d = np.abs(ev - lambda0)
    order = np.argsort(d)
    i = order[0]
    if d[i] > GAP_TOL:
        raise SpectralGapError(f"scaled transpose has no eigenvalue within {GAP_TOL} of {lambda0}")
    if np.abs(ev[order[1:]] - ev[i]).min() < GAP_TOL:
        raise SpectralGapError(f"eigenvalue {lambda0} is not simple")
    phi = real_eigenvector(FourierVector(np.conj(V[:, i])))
    mean = phi.mean.real
    if abs(mean) < 1e-14:
        raise NumericalError("adjoint representative has zero mean; cannot impose phi0(1) = 1")
    return phi / mean


def normalize_pair(Lhat, lambda0, v0_raw: FourierVector, phi0_raw: FourierVector) -> EigenData:
    """Scale ``phi0`` to ``phi0(1) = 1`` and then ``v0`` to ``phi0(v0) = 1``."""
    phi0 = phi0_raw / phi0_raw.mean
    p = h1_pairing(phi0, v0_raw)
    if abs(p) <= 1e-12:
        raise NumericalError("degenerate pairing phi0(v0) = 0")
    v0 = v0_raw / np.conj(p)
    if v0_raw.is_real(1e-8) and phi0_raw.is_real(1e-8):
        v0, phi0 = v0.real_part(), phi0.real_part()
    return EigenData(float(np.real(lambda0)), v0, phi0)


def eigen_data(Lhat: TransferMatrix, target: float) -> EigenData:
    """Eigenvalue nearest ``target`` with its normalised eigenvector and functional."""
    lam, v = eigenpair(Lhat, target)
    if abs(lam.imag) > 1e-8:
        raise UnsupportedEigenvalueError(f"eigenvalue {lam} near {target} is not real")
    phi = adjoint_representative(Lhat, lam.real)
    return normalize_pair(Lhat, lam.real, v, phi)

"""Fourier-basis matrix of the transfer operator and related linear algebra.

Entry ``(n, m)`` of the matrix is ``int L(e_m) conj(e_n) = conj(int conj(e_m) e_n o T)``,
obtained from the DFT of ``e_n o T`` sampled on a grid ``fine_factor`` times
finer than the ``N``-grid.  Rows and columns follow the storage order of
:class:`~circle_response.fourier.FourierVector`.
"""
from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from .circle_map import CircleMap, PiecewiseLinearMap, check_markov
from .exceptions import NumericalError, SpectralGapError
from .fourier import TWO_PI, FourierVector, frequencies, inverse_dft

__all__ = [
    "TransferMatrix",
    "MarkovMatrix",
    "Resolvent",
    "assemble",
    "apply",
    "invariant_density",
    "spectrum",
    "eigenpair",
    "resolvent_solve",
    "markov_matrix",
    "real_eigenvector",
    "real_structured_eig",
    "write_spectrum_csv",
]

GAP_TOL = 1e-6


class NegativeDensityWarning(UserWarning):
    pass


@dataclass(frozen=True, eq=False)
class TransferMatrix:
    """Dense ``N x N`` complex matrix acting on Fourier coefficients."""

    matrix: np.ndarray
    fine_factor: int = 8
    source: dict | None = field(default=None, repr=False)

    @property
    def N(self) -> int:
        return self.matrix.shape[0]

    @property
    def freqs(self) -> np.ndarray:
        return frequencies(self.N)

    def __matmul__(self, v: FourierVector) -> FourierVector:
        return apply(self, v)

    def eigvals(self) -> np.ndarray:
        return _eig(self)[0]

    def to_csv(self, path) -> None:
        """Write ``n, m, re, im`` rows in row-major frequency order."""
        n = self.freqs
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["n", "m", "re", "im"])
            for i, ni in enumerate(n):
                for j, mj in enumerate(n):
                    z = self.matrix[i, j]
                    w.writerow([int(ni), int(mj), repr(z.real), repr(z.imag)])

    def save(self, path) -> None:
        """Binary dump (``.npy``) of the complex matrix."""
        np.save(path, self.matrix)


def real_basis(N: int) -> np.ndarray:
    """Unitary ``Q`` whose columns are ``1``, ``sqrt2 cos``, ``sqrt2 sin`` and the Nyquist cosine.

    Operators that map real functions to real functions become real matrices
    ``Q^H A Q``.
    """
    Q = np.zeros((N, N), dtype=complex)
    zero = N // 2 - 1
    Q[zero, 0] = 1.0
    Q[N - 1, N - 1] = 1.0
    r = 1.0 / np.sqrt(2.0)
    for k in range(1, N // 2):
        p, m = zero + k, zero - k
        Q[p, 2 * k - 1], Q[m, 2 * k - 1] = r, r
        Q[p, 2 * k], Q[m, 2 * k] = -1j * r, 1j * r
    return Q


def real_structured_eig(A: np.ndarray):
    """Eigen-decomposition of a matrix that preserves real functions.

    Solving in the real basis returns exact conjugate pairs and real
    eigenvectors for real eigenvalues.
    """
    Q = real_basis(A.shape[0])
    B = Q.conj().T @ A @ Q
    if np.abs(B.imag).max() > 1e-10 * max(np.abs(B).max(), 1.0):
        ev, V = sla.eig(A, check_finite=False)
        return ev, V
    ev, W = sla.eig(B.real, check_finite=False)
    return ev, Q @ W


def _eig(Lhat: TransferMatrix):
    # cache on the (frozen) instance: the dense eigensolve is the costly step
    cached = getattr(Lhat, "_eig_cache", None)
    if cached is None:
        cached = real_structured_eig(Lhat.matrix)
        object.__setattr__(Lhat, "_eig_cache", cached)
    return cached


def assemble(map_: CircleMap, N: int, fine_factor: int = 8) -> TransferMatrix:
    """Fourier matrix of the transfer operator of ``map_`` at resolution ``N``."""
    if N % 2 or N < 16:
        raise ValueError(f"N must be even and >= 16, got {N}")
    if fine_factor < 1:
        raise ValueError("fine_factor must be a positive integer")
    M = fine_factor * N
    T = map_.lift_on_grid(M)
    n = frequencies(N)
    # e_n(T(x)) depends on T mod 1 only; reduce first to keep phases accurate
    Tm = np.mod(T, 1.0)
    H = np.exp(TWO_PI * 1j * np.outer(n, Tm))
    Hhat = np.fft.fft(H, axis=1) / M
    L = np.conj(Hhat[:, n % M])
    # the stored Nyquist coefficient stands for a cos(pi N x): average the
    # +-N/2 input columns and alias the -N/2 output row onto +N/2
    L[:, -1] = 0.5 * (L[:, -1] + np.conj(Hhat[:, (-N // 2) % M]))
    Hm = np.exp(-TWO_PI * 1j * (N // 2) * Tm)
    Hm_hat = np.fft.fft(Hm) / M
    L[-1, :] += np.conj(Hm_hat[n % M])
    L[-1, -1] += 0.5 * (np.conj(Hm_hat[(-N // 2) % M]) - np.conj(Hm_hat[(N // 2) % M]))
    return TransferMatrix(L, fine_factor, source=map_.to_dict() if hasattr(map_, "to_dict") else None)


def apply(Lhat: TransferMatrix, v: FourierVector) -> FourierVector:
    if v.size != Lhat.N:
        raise ValueError(f"size mismatch: matrix {Lhat.N}, vector {v.size}")
    return FourierVector(Lhat.matrix @ v.coeffs)


def spectrum(Lhat: TransferMatrix, top_k: int | None = None) -> np.ndarray:
    """Eigenvalues sorted by decreasing modulus (ties: by argument)."""
    ev = _eig(Lhat)[0]
    top_k = Lhat.N if top_k is None else top_k
    if top_k > Lhat.N:
        raise ValueError("top_k exceeds the matrix size")
    order = np.lexsort((np.angle(ev), -np.abs(ev)))
    return ev[order][:top_k]


def real_eigenvector(v: FourierVector) -> FourierVector:
    """Rotate a complex multiple of a real function back to a real function.

    Picks the phase that maximises the real part on the grid and drops the
    remaining imaginary part.
    """
    s = v.samples()
    phase = np.angle(np.sum(s * s)) / 2.0
    s = np.real(s * np.exp(-1j * phase))
    out = np.fft.fft(s) / s.size
    return FourierVector(out[v.freqs % s.size])


def _nearest(ev, target, what):
    d = np.abs(ev - target)
    order = np.argsort(d)
    i = order[0]
    if ev.size > 1:
        gap = np.abs(ev[order[1:]] - ev[i]).min()
        if gap < GAP_TOL:
            raise SpectralGapError(f"{what} near {target} is not simple (gap {gap:.2e})")
    return i


def eigenpair(Lhat: TransferMatrix, target: complex, radius: float = 1e-2):
    """Eigenvalue nearest ``target`` and its right eigenvector (unnormalised).

    For a real eigenvalue the eigenvector is returned as a real-valued function.
    """
    ev, V = _eig(Lhat)
    i = _nearest(ev, target, "eigenvalue")
    if abs(ev[i] - target) > radius:
        raise SpectralGapError(f"no eigenvalue within {radius} of {target}")
    lam = ev[i]
    v = FourierVector(V[:, i])
    if abs(lam.imag) <= 1e-8:
        v = real_eigenvector(v)
    return lam, v


def invariant_density(Lhat: TransferMatrix) -> FourierVector:
    """Leading eigenvector, scaled to unit integral and returned real-valued."""
    ev, V = _eig(Lhat)
    i = _nearest(ev, 1.0, "leading eigenvalue")
    if abs(ev[i] - 1.0) > 1e-2:
        raise SpectralGapError(f"no eigenvalue near 1 (closest {ev[i]:.6g})")
    v = V[:, i]
    a0 = v[Lhat.N // 2 - 1]
    if abs(a0) < 1e-14:
        raise NumericalError("leading eigenvector has zero mean")
    f = FourierVector(v / a0).real_part()
    f = f / f.mean.real
    low = inverse_dft(f, 4 * Lhat.N).real.min()
    if low < -1e-6:
        warnings.warn(f"invariant density dips to {low:.3g} on the 4N grid", NegativeDensityWarning)
    return f


class Resolvent:
    """``(I - L)^{-1}`` on mean-zero coefficient vectors, one LU factorisation.

    The frequency-0 row and column are removed before factorising, so the
    solution always has zero mean.
    """

    def __init__(self, Lhat: TransferMatrix, mean_tol: float = 1e-8):
        self.Lhat = Lhat
        self.mean_tol = mean_tol
        N = Lhat.N
        self._zero = N // 2 - 1
        self._keep = np.delete(np.arange(N), self._zero)
        A = np.eye(N - 1) - Lhat.matrix[np.ix_(self._keep, self._keep)]
        lu, piv = sla.lu_factor(A, check_finite=False)
        if np.min(np.abs(np.diag(lu))) < 1e-13 * np.max(np.abs(np.diag(lu))):
            raise SpectralGapError("I - L is singular on mean-zero functions")
        self._lu = (lu, piv)

    def solve(self, rhs):
        """Solve for a FourierVector, or for each row of a 2-d coefficient array."""
        single = isinstance(rhs, FourierVector)
        B = np.atleast_2d(rhs.coeffs if single else np.asarray(rhs, dtype=complex))
        if np.abs(B[:, self._zero]).max(initial=0.0) > self.mean_tol:
            raise ValueError("resolvent right-hand side must have zero mean")
        Y = np.zeros_like(B)
        Y[:, self._keep] = sla.lu_solve(self._lu, B[:, self._keep].T, check_finite=False).T
        if single:
            return FourierVector(Y[0])
        return Y


def resolvent_solve(Lhat: TransferMatrix, rhs: FourierVector) -> FourierVector:
    return Resolvent(Lhat).solve(rhs)


# Markov (indicator-basis) representation ----------------------------------

@dataclass(frozen=True, eq=False)
class MarkovMatrix:
    """Transfer operator restricted to indicators of the linearity intervals.

    Column ``j`` holds the coefficients of ``L 1_{I_j}`` in the basis
    ``1_{I_i}``.
    """

    matrix: np.ndarray
    breakpoints: np.ndarray
    slopes: np.ndarray

    @property
    def lengths(self) -> np.ndarray:
        return np.diff(self.breakpoints)

    def eigvals(self) -> np.ndarray:
        ev = np.linalg.eigvals(self.matrix)
        return ev[np.lexsort((np.angle(ev), -np.abs(ev)))]

    def essential_bound(self) -> float:
        """``1 / min slope``: radius of the essential spectrum."""
        return float(1.0 / np.min(np.abs(self.slopes)))

    def stationary_density(self) -> np.ndarray:
        """Invariant density as its constant values on each interval."""
        ev, V = np.linalg.eig(self.matrix)
        i = np.argmin(np.abs(ev - 1.0))
        h = np.real(V[:, i])
        return h / np.dot(h, self.lengths)


def markov_matrix(map_: PiecewiseLinearMap, tol: float = 1e-9) -> MarkovMatrix:
    """Matrix with entry ``1/slope_j`` when interval ``I_i`` lies in ``T(I_j)`` mod 1."""
    check_markov(map_, tol)
    x = map_.breakpoints
    K = map_.intervals
    mids = 0.5 * (x[:-1] + x[1:])
    P = np.zeros((K, K))
    slopes = map_.slopes
    for j in range(K):
        lo, hi = map_.images[j], map_.images[j + 1]
        for shift in range(int(np.floor(lo)) - 1, int(np.ceil(hi)) + 1):
            inside = (mids + shift > lo) & (mids + shift < hi)
            P[inside, j] += 1.0 / slopes[j]
    return MarkovMatrix(P, x.copy(), slopes)


def write_spectrum_csv(path, eigenvalues) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["re", "im", "modulus"])
        for z in eigenvalues:
            w.writerow([repr(float(z.real)), repr(float(z.imag)), repr(float(abs(z)))])

"""Periodic grids, discrete Fourier transforms and Sobolev norms on the circle.

Functions on S^1 = [0, 1) are stored as :class:`FourierVector` objects holding
the coefficients of ``f(x) = sum_n a_n exp(2 pi i n x)`` for the frequencies
``n = -N/2 + 1, ..., N/2`` (``N`` even).  Grid samples are plain numpy arrays
with the value at ``x_j = j / M`` in position ``j``.

The forward transform is normalised by ``1/M`` so that coefficients are the
rectangle-rule approximations of ``int f(x) exp(-2 pi i n x) dx``.

The Nyquist coefficient ``a_{N/2}`` is shared between ``+N/2`` and ``-N/2``:
whenever a vector is evaluated off its own ``N``-grid (zero padding,
arbitrary points) it contributes ``a_{N/2} cos(pi N x)``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "FourierVector",
    "frequencies",
    "grid",
    "forward_dft",
    "inverse_dft",
    "spectral_derivative",
    "circular_central_difference",
    "pointwise_multiply",
    "l2_inner",
    "h1_weights",
    "sobolev_weight",
    "sobolev_norm",
]

TWO_PI = 2.0 * np.pi


def frequencies(N: int) -> np.ndarray:
    """Frequencies ``-N/2+1, ..., N/2`` in storage order."""
    _check_even(N)
    return np.arange(-N // 2 + 1, N // 2 + 1)


def grid(M: int) -> np.ndarray:
    """Nodes ``j/M`` for ``j = 0, ..., M-1``."""
    return np.arange(M) / M


def _check_even(N):
    if N <= 0 or N % 2:
        raise ValueError(f"grid size must be a positive even integer, got {N}")


@dataclass(frozen=True, eq=False)
class FourierVector:
    """Fourier coefficients of a periodic function on the unit circle.

    Parameters
    ----------
    coeffs : array_like of complex, shape (N,)
        ``coeffs[k]`` is the coefficient of frequency ``k - N/2 + 1``.
    """

    coeffs: np.ndarray

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=complex)
        if c.ndim != 1:
            raise ValueError("coefficients must be one-dimensional")
        _check_even(c.size)
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    # construction -------------------------------------------------------
    @classmethod
    def zeros(cls, N: int) -> FourierVector:
        return cls(np.zeros(N, dtype=complex))

    @classmethod
    def mode(cls, N: int, n: int, value: complex = 1.0) -> FourierVector:
        """The single exponential ``value * e_n``."""
        c = np.zeros(N, dtype=complex)
        c[_index(N, n)] = value
        return cls(c)

    @classmethod
    def from_function(cls, func, N: int, M: int | None = None) -> FourierVector:
        """Sample ``func`` on an ``M``-point grid and keep ``N`` frequencies."""
        M = N if M is None else M
        return truncate(forward_dft(func(grid(M))), N)

    @classmethod
    def from_trig(cls, N: int, const=0.0, cos=(), sin=()) -> FourierVector:
        """Build ``const + sum_k cos[k-1] cos(2 pi k x) + sin[k-1] sin(2 pi k x)``."""
        c = np.zeros(N, dtype=complex)
        c[_index(N, 0)] = const
        for k, (a, b) in enumerate(_pad_pairs(cos, sin), start=1):
            if a == 0 and b == 0:
                continue
            if k >= N // 2:
                raise ValueError(f"frequency {k} not representable with N={N}")
            c[_index(N, k)] += 0.5 * (a - 1j * b)
            c[_index(N, -k)] += 0.5 * (a + 1j * b)
        return cls(c)

    # basic properties -----------------------------------------------------
    @property
    def size(self) -> int:
        return self.coeffs.size

    @property
    def freqs(self) -> np.ndarray:
        return frequencies(self.size)

    def __getitem__(self, n: int) -> complex:
        return self.coeffs[_index(self.size, n)]

    @property
    def mean(self) -> complex:
        return self[0]

    def symmetry_defect(self) -> float:
        """Largest violation of ``a_{-n} = conj(a_n)`` (Nyquist: ``Im a = 0``)."""
        c = self.coeffs
        N = self.size
        inner = c[: N - 1]  # frequencies -N/2+1 .. N/2-1
        d = np.abs(inner - np.conj(inner[::-1]))
        return float(max(d.max(initial=0.0), abs(c[-1].imag)))

    def is_real(self, tol: float = 1e-12) -> bool:
        return self.symmetry_defect() <= tol

    def real_part(self) -> FourierVector:
        """Coefficients of ``Re f`` (projection onto real-valued functions)."""
        c = self.coeffs
        inner = c[:-1]
        out = np.empty_like(c)
        out[:-1] = 0.5 * (inner + np.conj(inner[::-1]))
        out[-1] = c[-1].real
        return FourierVector(out)

    # arithmetic -----------------------------------------------------------
    def __add__(self, other):
        return FourierVector(self.coeffs + _coeffs_like(self, other))

    def __sub__(self, other):
        return FourierVector(self.coeffs - _coeffs_like(self, other))

    def __neg__(self):
        return FourierVector(-self.coeffs)

    def __mul__(self, scalar):
        if isinstance(scalar, FourierVector):
            return pointwise_multiply(self, scalar)
        return FourierVector(self.coeffs * scalar)

    __rmul__ = __mul__

    def __truediv__(self, scalar):
        return FourierVector(self.coeffs / scalar)

    def norm(self) -> float:
        """L2 norm, equal to the Euclidean norm of the coefficients."""
        return float(np.linalg.norm(self.coeffs))

    # evaluation -----------------------------------------------------------
    def samples(self, M: int | None = None) -> np.ndarray:
        """Values on the ``M``-point grid (coarser or odd grids by direct summation)."""
        M = self.size if M is None else M
        if M < self.size or M % 2:
            return self.evaluate(grid(M))
        return inverse_dft(self, M)

    def evaluate(self, x, order: int = 0) -> np.ndarray:
        """Evaluate the trigonometric polynomial (or a derivative) at points ``x``."""
        x = np.asarray(x, dtype=float)
        n = self.freqs.astype(float)
        c = self.coeffs * (TWO_PI * 1j * n) ** order
        # Nyquist: a cos(pi N x) has derivative factors of (i pi N)^k cos-type split
        nyq = self.coeffs[-1]
        c = c.copy()
        c[-1] = 0.0
        out = np.empty(x.shape, dtype=complex)
        flat = x.ravel()
        res = out.ravel()
        step = max(1, 2**22 // max(self.size, 1))
        for s in range(0, flat.size, step):
            xs = flat[s : s + step]
            res[s : s + step] = np.exp(TWO_PI * 1j * np.outer(xs, n)) @ c
        half = np.pi * self.size
        if nyq != 0:
            k = half * flat
            # d^order/dx^order of cos(k x) evaluated at x
            dcos = np.real((1j * half) ** order * np.exp(1j * k))
            res += nyq * dcos
        return res.reshape(x.shape)

    def __repr__(self):
        return f"FourierVector(N={self.size})"


def _pad_pairs(cos, sin):
    cos, sin = list(cos), list(sin)
    m = max(len(cos), len(sin))
    cos += [0.0] * (m - len(cos))
    sin += [0.0] * (m - len(sin))
    return zip(cos, sin)


def _index(N, n):
    if not -N // 2 < n <= N // 2:
        raise IndexError(f"frequency {n} outside range for N={N}")
    return n + N // 2 - 1


def _coeffs_like(v, other):
    if isinstance(other, FourierVector):
        if other.size != v.size:
            raise ValueError(f"size mismatch: {v.size} vs {other.size}")
        return other.coeffs
    c = np.zeros(v.size, dtype=complex)
    c[_index(v.size, 0)] = other
    return c


def truncate(v: FourierVector, N: int) -> FourierVector:
    """Keep (or zero-pad to) the frequencies ``-N/2+1 .. N/2``."""
    _check_even(N)
    if N == v.size:
        return v
    out = np.zeros(N, dtype=complex)
    src = v.coeffs
    if N > v.size:
        # split the shared Nyquist mode of the smaller vector
        h = v.size // 2
        inner = src[:-1]
        out[_index(N, -h + 1) : _index(N, h - 1) + 1] = inner
        out[_index(N, h)] += 0.5 * src[-1]
        out[_index(N, -h)] += 0.5 * src[-1]
    else:
        h = N // 2
        lo = _index(v.size, -h + 1)
        out[:] = src[lo : lo + N]
        # fold -N/2 onto the shared Nyquist slot
        out[-1] += src[_index(v.size, -h)]
    return FourierVector(out)


# transforms --------------------------------------------------------------

def forward_dft(samples) -> FourierVector:
    """Coefficients ``a_n = (1/M) sum_j s_j exp(-2 pi i n j / M)``."""
    s = np.asarray(samples)
    if s.ndim != 1:
        raise ValueError("samples must be one-dimensional")
    M = s.size
    if M % 2:
        raise ValueError(f"forward_dft requires an even number of samples, got {M}")
    a = np.fft.fft(s) / M
    return FourierVector(a[frequencies(M) % M])


def inverse_dft(v: FourierVector, M: int) -> np.ndarray:
    """Values ``sum_n a_n exp(2 pi i n j / M)`` on the ``M``-point grid.

    ``M`` may exceed ``N`` (zero padding); the Nyquist coefficient is then
    split evenly between ``+N/2`` and ``-N/2``.
    """
    N = v.size
    if M < N:
        raise ValueError(f"inverse_dft needs M >= N ({M} < {N})")
    if M % 2:
        raise ValueError(f"inverse_dft requires even M, got {M}")
    full = np.zeros(M, dtype=complex)
    n = v.freqs
    if M == N:
        full[n % M] = v.coeffs
    else:
        full[n[:-1] % M] = v.coeffs[:-1]
        full[(N // 2) % M] += 0.5 * v.coeffs[-1]
        full[(-N // 2) % M] += 0.5 * v.coeffs[-1]
    return np.fft.ifft(full) * M


def spectral_derivative(v: FourierVector) -> FourierVector:
    """Exact derivative of the trigonometric polynomial, ``a_n -> 2 pi i n a_n``.

    The shared Nyquist mode ``cos(pi N x)`` has a derivative that vanishes on the
    grid, so its coefficient is set to zero; this keeps real inputs real.
    """
    d = TWO_PI * 1j * v.freqs * v.coeffs
    d[-1] = 0.0
    return FourierVector(d)


def circular_central_difference(samples) -> np.ndarray:
    """``(s[j+1] - s[j-1]) * M / 2`` with periodic wraparound (along the last axis)."""
    s = np.asarray(samples)
    M = s.shape[-1]
    if M < 3:
        raise ValueError("central difference needs at least 3 samples")
    return (np.roll(s, -1, axis=-1) - np.roll(s, 1, axis=-1)) * (M / 2.0)


def pointwise_multiply(u: FourierVector, v: FourierVector) -> FourierVector:
    """Product ``u v`` computed on a 2N grid and truncated back to N frequencies.

    Exact whenever the true product has bandwidth below ``N/2``; frequencies
    outside the band are discarded.
    """
    if u.size != v.size:
        raise ValueError(f"size mismatch: {u.size} vs {v.size}")
    N = u.size
    prod = inverse_dft(u, 2 * N) * inverse_dft(v, 2 * N)
    return truncate(forward_dft(prod), N)


def l2_inner(u: FourierVector, v: FourierVector) -> complex:
    """``int u conj(v)`` via Parseval: ``sum_n u_n conj(v_n)``."""
    if u.size != v.size:
        raise ValueError(f"size mismatch: {u.size} vs {v.size}")
    return complex(np.dot(u.coeffs, np.conj(v.coeffs)))


def sobolev_weight(n, k: int = 4, gamma: float = 1.0):
    """Weight ``sum_{i=0}^k (4 pi^2 n^2 / gamma^2)^i`` of the H^k(gamma) norm.

    ``n`` may be an integer or an array of frequencies.
    """
    if gamma <= 0:
        raise ValueError(f"gamma must be positive, got {gamma}")
    if k < 0:
        raise ValueError("derivative order must be non-negative")
    q = (TWO_PI * np.asarray(n, dtype=float) / gamma) ** 2
    w = np.zeros_like(q)
    term = np.ones_like(q)
    for _ in range(k + 1):
        w = w + term
        term = term * q
    return w


def h1_weights(N: int) -> np.ndarray:
    """``1 + 4 pi^2 m^2`` for every stored frequency: the H^1 pairing weights."""
    return sobolev_weight(frequencies(N), 1, 1.0)


def sobolev_norm(v: FourierVector, k: int = 4, gamma: float = 1.0) -> float:
    """``sqrt(sum_n w_n(gamma) |a_n|^2)``."""
    w = sobolev_weight(v.freqs, k, gamma)
    return float(np.sqrt(np.sum(w * np.abs(v.coeffs) ** 2)))

"""Expanding maps of the circle.

Every map is described by its lift ``T: R -> R``, written as
``T(x) = d x + p(x)`` with ``d >= 2`` the degree and ``p`` a 1-periodic
function.  Three concrete families are provided:

* :class:`TrigPolynomialMap` -- ``p`` is a trigonometric polynomial;
* :class:`PiecewiseLinearMap` -- the lift interpolates breakpoint/image pairs;
* :class:`MollifiedMap` -- ``p`` is given by Fourier coefficients, typically
  produced by :func:`mollify`.

:class:`PerturbedMap` adds ``delta * tdot`` to any of them.
"""
from __future__ import annotations

import json
from abc import ABC, abstractmethod
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .exceptions import MarkovError, NotExpandingError
from .fourier import TWO_PI, FourierVector, inverse_dft

__all__ = [
    "CircleMap",
    "TrigPolynomialMap",
    "PiecewiseLinearMap",
    "MollifiedMap",
    "PerturbedMap",
    "BumpKernel",
    "min_derivative",
    "check_expanding",
    "mollify",
    "perturb",
    "preset",
    "PRESETS",
    "map_from_dict",
    "load_map",
    "check_markov",
]

EXPANSIVITY_GRID = 2**14


class CircleMap(ABC):
    """Base class: a lift of degree ``degree`` with periodic part ``p``."""

    degree: int

    @abstractmethod
    def lift(self, x) -> np.ndarray:
        """Lift ``T(x)`` at arbitrary real points."""

    @abstractmethod
    def derivative(self, x, order: int = 1) -> np.ndarray:
        """``order``-th derivative of the lift (``order`` in 1..3)."""

    @abstractmethod
    def to_dict(self) -> dict:
        ...

    def __call__(self, x):
        return np.mod(self.lift(x), 1.0)

    def lift_on_grid(self, M: int) -> np.ndarray:
        return self.lift(np.arange(M) / M)

    def derivative_on_grid(self, M: int, order: int = 1) -> np.ndarray:
        return self.derivative(np.arange(M) / M, order)

    def periodic_on_grid(self, M: int) -> np.ndarray:
        x = np.arange(M) / M
        return self.lift_on_grid(M) - self.degree * x

    def inverse_lift(self, y, resolution: int = 2**18) -> np.ndarray:
        """Solve ``T(x) = y`` for ``y`` in ``[T(0), T(0) + degree]``.

        Monotone interpolation on a dense grid followed by one Newton step.
        """
        y = np.asarray(y, dtype=float)
        xs = np.arange(resolution + 1) / resolution
        ts = np.append(self.lift_on_grid(resolution), self.lift(1.0))
        x = np.interp(y, ts, xs)
        return x - (self.lift(x) - y) / self.derivative(x, 1)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @staticmethod
    def _check_order(order):
        if order not in (1, 2, 3):
            raise ValueError(f"derivative order must be 1, 2 or 3, got {order}")


class TrigPolynomialMap(CircleMap):
    """``T(x) = d x + shift + sum_k cos_k cos(2 pi k x) + sin_k sin(2 pi k x)``."""

    def __init__(self, degree: int, cos=(), sin=(), shift: float = 0.0):
        if int(degree) != degree or degree < 2:
            raise ValueError("degree must be an integer >= 2")
        self.degree = int(degree)
        m = max(len(cos), len(sin))
        self.cos = np.zeros(m)
        self.sin = np.zeros(m)
        self.cos[: len(cos)] = cos
        self.sin[: len(sin)] = sin
        self.shift = float(shift)

    def _terms(self, x, order):
        x = np.asarray(x, dtype=float)
        out = np.zeros_like(x)
        for k in range(1, self.cos.size + 1):
            a, b = self.cos[k - 1], self.sin[k - 1]
            if a == 0 and b == 0:
                continue
            w = TWO_PI * k
            # derivative of cos/sin rotates the phase by pi/2 per order
            phase = w * x + order * np.pi / 2
            out += w**order * (a * np.cos(phase) + b * np.sin(phase))
        return out

    def lift(self, x):
        x = np.asarray(x, dtype=float)
        return self.degree * x + self.shift + self._terms(x, 0)

    def derivative(self, x, order=1):
        self._check_order(order)
        d = self._terms(x, order)
        return d + self.degree if order == 1 else d

    def periodic_part(self, N: int) -> FourierVector:
        return FourierVector.from_trig(N, self.shift, self.cos, self.sin)

    def to_dict(self):
        coeffs = [[0, self.shift, 0.0]] + [
            [k, float(a), float(b)]
            for k, (a, b) in enumerate(zip(self.cos, self.sin), start=1)
            if a or b
        ]
        return {"variant": "TrigPolynomial", "degree": self.degree, "coefficients": coeffs}


class PiecewiseLinearMap(CircleMap):
    """Lift obtained by joining ``(breakpoints[i], images[i])`` linearly.

    ``breakpoints`` must increase from ``x0`` to ``x0 + 1`` and ``images``
    from ``y0`` to ``y0 + d``.
    """

    def __init__(self, breakpoints, images):
        x = np.asarray(breakpoints, dtype=float)
        y = np.asarray(images, dtype=float)
        if x.shape != y.shape or x.ndim != 1 or x.size < 3:
            raise ValueError("need matching 1-d breakpoint and image arrays")
        if abs(x[-1] - x[0] - 1.0) > 1e-12:
            raise ValueError("breakpoints must span exactly one period")
        if np.any(np.diff(x) <= 0):
            raise ValueError("breakpoints must be strictly increasing")
        d = y[-1] - y[0]
        if abs(d - round(d)) > 1e-12 or round(d) < 2:
            raise ValueError("images must span an integer degree >= 2")
        self.breakpoints = x
        self.images = y
        self.degree = int(round(d))

    @property
    def slopes(self) -> np.ndarray:
        return np.diff(self.images) / np.diff(self.breakpoints)

    @property
    def intervals(self) -> int:
        return self.breakpoints.size - 1

    def _reduce(self, x):
        x0 = self.breakpoints[0]
        shifts = np.floor(np.asarray(x, dtype=float) - x0)
        return np.asarray(x, dtype=float) - shifts, shifts

    def lift(self, x):
        r, k = self._reduce(x)
        return np.interp(r, self.breakpoints, self.images) + self.degree * k

    def derivative(self, x, order=1):
        self._check_order(order)
        r, _ = self._reduce(x)
        if order > 1:
            return np.zeros_like(r)
        i = np.clip(np.searchsorted(self.breakpoints, r, side="right") - 1, 0, self.intervals - 1)
        return self.slopes[i]

    def inverse_lift(self, y, resolution=None):
        y = np.asarray(y, dtype=float)
        k = np.floor((y - self.images[0]) / self.degree)
        r = y - self.degree * k
        return np.interp(r, self.images, self.breakpoints) + k

    def markov_defect(self) -> float:
        """Largest distance from an image (mod 1) to the nearest breakpoint."""
        img = np.mod(self.images - self.breakpoints[0], 1.0) + self.breakpoints[0]
        d = np.abs(img[:, None] - self.breakpoints[None, :])
        d = np.minimum(d, 1.0 - d)
        return float(d.min(axis=1).max())

    def is_markov(self, tol: float = 1e-9) -> bool:
        return self.markov_defect() <= tol

    def periodic_coefficients(self, kmax: int) -> tuple[np.ndarray, np.ndarray]:
        """Exact Fourier coefficients of ``p(x) = T(x) - d x`` for ``|k| <= kmax``.

        ``p'' `` is a sum of point masses at the breakpoints, which gives
        ``p_k = -sum_i J_i exp(-2 pi i k x_i) / (2 pi k)^2`` with ``J_i`` the
        slope jumps.
        """
        x, y = self.breakpoints, self.images
        s = self.slopes - self.degree
        jumps = s - np.roll(s, 1)
        k = np.arange(-kmax, kmax + 1)
        c = np.empty(k.size, dtype=complex)
        nz = k != 0
        ph = np.exp(-TWO_PI * 1j * np.outer(k[nz], x[:-1]))
        c[nz] = -(ph @ jumps) / (TWO_PI * k[nz]) ** 2
        # constant term: trapezoid rule is exact for linear pieces
        pv = y - self.degree * x
        c[~nz] = np.sum(0.5 * (pv[1:] + pv[:-1]) * np.diff(x))
        return k, c

    def to_dict(self):
        return {
            "variant": "PiecewiseLinearMarkov",
            "degree": self.degree,
            "breakpoints": self.breakpoints.tolist(),
            "images": self.images.tolist(),
        }


class MollifiedMap(CircleMap):
    """Lift ``d x + sum_k c_k exp(2 pi i k x)`` with the ``c_k`` stored explicitly.

    Parameters
    ----------
    degree : int
    freqs, coeffs : arrays
        Frequencies ``k`` (symmetric range) and the Fourier coefficients of the
        periodic part.
    base, epsilon, samples :
        Provenance, kept for serialisation.
    """

    def __init__(self, degree, freqs, coeffs, base=None, epsilon=None, samples=None):
        self.degree = int(degree)
        self.freqs = np.asarray(freqs, dtype=int)
        self.coeffs = np.asarray(coeffs, dtype=complex)
        self.base = base
        self.epsilon = epsilon
        self.samples = samples
        keep = self.coeffs != 0
        self._kf = self.freqs[keep].astype(float)
        self._kc = self.coeffs[keep]

    def _series(self, x, order):
        x = np.asarray(x, dtype=float)
        c = self._kc * (TWO_PI * 1j * self._kf) ** order
        flat = x.ravel()
        out = np.empty(flat.size)
        step = max(1, 2**22 // max(self._kf.size, 1))
        for s in range(0, flat.size, step):
            xs = flat[s : s + step]
            out[s : s + step] = (np.exp(TWO_PI * 1j * np.outer(xs, self._kf)) @ c).real
        return out.reshape(x.shape)

    def _grid_series(self, M, order):
        full = np.zeros(M, dtype=complex)
        np.add.at(full, self.freqs % M, self.coeffs * (TWO_PI * 1j * self.freqs) ** order)
        return (np.fft.ifft(full) * M).real

    def lift(self, x):
        x = np.asarray(x, dtype=float)
        return self.degree * x + self._series(x, 0)

    def derivative(self, x, order=1):
        self._check_order(order)
        d = self._series(x, order)
        return d + self.degree if order == 1 else d

    def lift_on_grid(self, M):
        return self.degree * np.arange(M) / M + self._grid_series(M, 0)

    def derivative_on_grid(self, M, order=1):
        self._check_order(order)
        d = self._grid_series(M, order)
        return d + self.degree if order == 1 else d

    def to_dict(self):
        out = {
            "variant": "Mollified",
            "degree": self.degree,
            "epsilon": self.epsilon,
            "samples": self.samples,
        }
        if self.base is not None:
            out["base"] = self.base.to_dict()
        else:
            out["coefficients"] = [
                [int(k), float(c.real), float(c.imag)] for k, c in zip(self.freqs, self.coeffs)
            ]
        return out


class PerturbedMap(CircleMap):
    """The additive perturbation ``T_delta = T_0 + delta * tdot``."""

    def __init__(self, base: CircleMap, tdot: FourierVector, delta: float):
        if not tdot.is_real(1e-10):
            raise ValueError("map perturbations must be real-valued")
        self.base = base
        self.tdot = tdot.real_part()
        self.delta = float(delta)
        self.degree = base.degree

    def lift(self, x):
        return self.base.lift(x) + self.delta * self.tdot.evaluate(x).real

    def derivative(self, x, order=1):
        self._check_order(order)
        return self.base.derivative(x, order) + self.delta * self.tdot.evaluate(x, order).real

    def lift_on_grid(self, M):
        return self.base.lift_on_grid(M) + self.delta * self._tdot_grid(M, 0)

    def derivative_on_grid(self, M, order=1):
        self._check_order(order)
        return self.base.derivative_on_grid(M, order) + self.delta * self._tdot_grid(M, order)

    def _tdot_grid(self, M, order):
        v = self.tdot
        if order:
            d = v.coeffs * (TWO_PI * 1j * v.freqs) ** order
            if order % 2:
                d[-1] = 0.0
            v = FourierVector(d)
        if M >= v.size and M % 2 == 0:
            return inverse_dft(v, M).real
        return v.evaluate(np.arange(M) / M).real

    def to_dict(self):
        return {
            "variant": "Perturbed",
            "degree": self.degree,
            "base": self.base.to_dict(),
            "delta": self.delta,
            "tdot": [[int(n), float(c.real), float(c.imag)] for n, c in zip(self.tdot.freqs, self.tdot.coeffs)],
        }


# bump kernel and smoothing ------------------------------------------------

def _bump_shape(u):
    u = np.asarray(u, dtype=float)
    out = np.zeros_like(u)
    inside = np.abs(u) < 1.0
    out[inside] = np.exp(-1.0 / (1.0 - u[inside] ** 2))
    return out


_KAPPA = integrate.quad(lambda u: float(_bump_shape(u)), -1.0, 1.0, epsabs=0.0, epsrel=1e-12, limit=200)[0]


@dataclass(frozen=True)
class BumpKernel:
    """``b(x) = exp(-1 / (1 - (x/eps)^2)) / (kappa eps)`` on ``|x| < eps``."""

    epsilon: float

    def __post_init__(self):
        if not 0 < self.epsilon < 0.5:
            raise ValueError("epsilon must lie in (0, 1/2)")

    @property
    def kappa(self) -> float:
        return _KAPPA

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        # periodic distance to 0
        r = x - np.round(x)
        return _bump_shape(r / self.epsilon) / (self.kappa * self.epsilon)

    def fourier_coefficients(self, kmax: int, resolution: int = 2**16) -> np.ndarray:
        """``int b(x) exp(-2 pi i k x) dx`` for ``k = -kmax .. kmax``.

        Trapezoid rule on a periodic grid, spectrally accurate for this
        smooth compactly supported kernel.
        """
        res = max(resolution, 4 * kmax)
        res += res % 2
        vals = self(np.arange(res) / res)
        bh = np.fft.fft(vals) / res
        bh /= bh[0].real  # discrete normalisation, int b = 1 exactly
        k = np.arange(-kmax, kmax + 1)
        return bh[k % res]


def mollify(base: CircleMap, epsilon: float, samples: int = 8192) -> MollifiedMap:
    """Smooth the periodic part of ``base`` by convolution with :class:`BumpKernel`.

    The result keeps the degree and carries Fourier coefficients for
    ``|k| < samples/2``.  For piecewise-linear bases the coefficients of the
    periodic part are exact; otherwise they come from ``samples`` grid values.
    """
    if samples < 4096 or samples % 2:
        raise ValueError("samples must be an even integer >= 4096")
    if isinstance(base, PiecewiseLinearMap):
        gap = np.diff(base.breakpoints).min()
        if epsilon >= gap:
            raise ValueError(f"epsilon={epsilon} must be below the smallest breakpoint gap {gap:.4g}")
    kmax = samples // 2 - 1
    if isinstance(base, PiecewiseLinearMap):
        k, pk = base.periodic_coefficients(kmax)
    else:
        p = base.periodic_on_grid(samples)
        ph = np.fft.fft(p) / samples
        k = np.arange(-kmax, kmax + 1)
        pk = ph[k % samples]
    ck = pk * BumpKernel(epsilon).fourier_coefficients(kmax)
    out = MollifiedMap(base.degree, k, ck, base=base, epsilon=epsilon, samples=samples)
    check_expanding(out)
    return out


def perturb(map_: CircleMap, tdot: FourierVector, delta: float) -> CircleMap:
    """``T_0 + delta * tdot``; raises :class:`NotExpandingError` if expansivity is lost."""
    if delta == 0:
        return map_
    out = PerturbedMap(map_, tdot, delta)
    check_expanding(out)
    return out


def min_derivative(map_: CircleMap, resolution: int = EXPANSIVITY_GRID) -> float:
    """Minimum of ``T'`` over a uniform grid (breakpoint slopes for PL maps)."""
    if resolution < 1024:
        raise ValueError("resolution must be at least 1024")
    if isinstance(map_, PiecewiseLinearMap):
        return float(map_.slopes.min())
    return float(map_.derivative_on_grid(resolution, 1).min())


def check_expanding(map_: CircleMap, resolution: int = EXPANSIVITY_GRID) -> float:
    """Return a lower bound for ``inf T'`` and raise unless it exceeds 1.

    Grid minimum minus ``sup|T''| / (2 * resolution)``.
    """
    dmin = min_derivative(map_, resolution)
    if not isinstance(map_, PiecewiseLinearMap):
        dmin -= np.abs(map_.derivative_on_grid(resolution, 2)).max() / (2 * resolution)
    if dmin <= 1.0:
        raise NotExpandingError(f"map is not expanding: inf T' <= {dmin:.6g}")
    return dmin


# presets -------------------------------------------------------------------

# Breakpoints of the two-branch Markov map; each branch sends breakpoint i
# onto breakpoint 2i (mod 12), which makes the 12 intervals a Markov partition.
GAPMAP_BREAKPOINTS = (
    0.0, 0.1197, 0.2045, 0.2453, 0.3369, 0.3874, 0.49,
    0.5875, 0.6336, 0.7343, 0.7695, 0.8523, 1.0,
)


def _gapmap12():
    x = np.array(GAPMAP_BREAKPOINTS)
    branch = x[[0, 2, 4, 6, 8, 10, 12]]
    y = np.concatenate([branch, 1.0 + branch[1:]])
    return PiecewiseLinearMap(x, y)


PRESETS = {
    "doubling": lambda: TrigPolynomialMap(2),
    "sticky2x": lambda: TrigPolynomialMap(2, sin=[-0.9 / TWO_PI]),
    "gapmap12": _gapmap12,
    "gapmap12-smooth": lambda: mollify(_gapmap12(), 1.0 / 40.0, 8192),
}


def preset(name: str) -> CircleMap:
    try:
        return PRESETS[name]()
    except KeyError:
        raise KeyError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}") from None


def map_from_dict(d: dict) -> CircleMap:
    """Inverse of ``to_dict`` (also accepts ``{"preset": name}``)."""
    if "preset" in d:
        m = preset(d["preset"])
        if "epsilon" in d:
            m = mollify(m, float(d["epsilon"]), int(d.get("samples", 8192)))
        return m
    variant = d.get("variant")
    if variant == "TrigPolynomial":
        kmax = max([int(k) for k, *_ in d.get("coefficients", [])] + [0])
        cos, sin = np.zeros(kmax), np.zeros(kmax)
        shift = 0.0
        for k, a, b in d.get("coefficients", []):
            if int(k) == 0:
                shift = float(a)
            else:
                cos[int(k) - 1], sin[int(k) - 1] = a, b
        m = TrigPolynomialMap(int(d["degree"]), cos, sin, shift)
    elif variant == "PiecewiseLinearMarkov":
        m = PiecewiseLinearMap(d["breakpoints"], d["images"])
        if int(d.get("degree", m.degree)) != m.degree:
            raise ValueError("declared degree does not match the images")
    elif variant == "Mollified":
        if "base" in d:
            m = mollify(map_from_dict(d["base"]), float(d["epsilon"]), int(d.get("samples") or 8192))
        else:
            k, re, im = np.array(d["coefficients"], dtype=float).T
            m = MollifiedMap(int(d["degree"]), k.astype(int), re + 1j * im,
                             epsilon=d.get("epsilon"), samples=d.get("samples"))
    elif variant == "Perturbed":
        n, re, im = np.array(d["tdot"], dtype=float).T
        tdot = FourierVector(re + 1j * im)
        m = PerturbedMap(map_from_dict(d["base"]), tdot, float(d["delta"]))
    else:
        raise ValueError(f"unknown map variant {variant!r}")
    return m


def load_map(path) -> CircleMap:
    with open(path) as fh:
        return map_from_dict(json.load(fh))


def check_markov(map_: PiecewiseLinearMap, tol: float = 1e-9) -> None:
    if not map_.is_markov(tol):
        raise MarkovError(
            f"breakpoint images are not breakpoints (defect {map_.markov_defect():.3g} > {tol:g})"
        )

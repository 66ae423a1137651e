"""Independent checks of the response formulas.

Finite differences perturb the map itself, ``T_delta = T_0 + delta * tdot``,
rebuild the transfer matrix and compare difference quotients with the
closed-form responses.  :func:`ulam_density` computes invariant densities by
a different discretisation altogether.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np
import scipy.sparse as sp

from .circle_map import CircleMap, perturb
from .exceptions import SpectralGapError
from .fourier import FourierVector
from .response import ResponseContext, density_response, eigenvalue_response
from .transfer import assemble, invariant_density

__all__ = [
    "FDReport",
    "DEFAULT_DELTAS",
    "fd_density_response",
    "fd_eigenvalue_response",
    "ulam_density",
    "ulam_matrix",
    "l1_distance",
]

DEFAULT_DELTAS = (1e-2, 5e-3, 2.5e-3)
ORDER_RANGE = (0.8, 2.2)
TRACKING_TOL = 1e-4


@dataclass
class FDReport:
    """Difference quotients against a closed-form response.

    ``errors[i]`` is the discrepancy at ``deltas[i]``; ``orders[i]`` the
    effective order between steps ``i`` and ``i + 1``.
    """

    kind: str
    deltas: list
    errors: list
    formula_value: float | None = None
    quotient_values: list = field(default_factory=list)
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        d = np.asarray(self.deltas, dtype=float)
        if d.size == 0 or np.any(d <= 0) or np.any(np.diff(d) >= 0):
            raise ValueError("deltas must be positive and strictly decreasing")
        if not np.all(np.isfinite(self.errors)):
            raise ValueError("non-finite discrepancy")

    @property
    def orders(self) -> list:
        e, d = np.asarray(self.errors), np.asarray(self.deltas)
        out = []
        for i in range(len(e) - 1):
            if e[i] <= 0 or e[i + 1] <= 0:
                out.append(math.nan)
            else:
                out.append(float(np.log(e[i] / e[i + 1]) / np.log(d[i] / d[i + 1])))
        return out

    @property
    def estimated_order(self) -> float:
        o = self.orders
        return o[-1] if o else math.nan

    @property
    def trivial(self) -> bool:
        return max(self.errors) == 0.0

    def passed(self, order_range=ORDER_RANGE) -> bool:
        """Strictly decreasing errors and a last-step order in ``order_range``."""
        if self.trivial:
            return True
        e = np.asarray(self.errors)
        if len(e) < 2 or np.any(np.diff(e) >= 0):
            return False
        lo, hi = order_range
        return lo <= self.estimated_order <= hi

    def to_dict(self) -> dict:
        def clean(x):
            return None if isinstance(x, float) and math.isnan(x) else x

        d = asdict(self)
        d.update(orders=[clean(o) for o in self.orders], estimated_order=clean(self.estimated_order),
                 passed=self.passed())
        return d

    def to_json(self, path=None) -> str:
        text = json.dumps(self.to_dict(), indent=1, default=float)
        if path is not None:
            with open(path, "w") as fh:
                fh.write(text + "\n")
        return text


def l1_distance(u: FourierVector, v: FourierVector, M: int) -> float:
    """Rectangle-rule ``int |u - v|`` on an ``M``-point grid."""
    return float(np.mean(np.abs((u - v).samples(M))))


def _context(map_, ctx, N, fine_factor, derivative, target=None):
    if ctx is None:
        ctx = ResponseContext.build(map_, N, fine_factor, target, derivative)
    return ctx


def fd_density_response(map_: CircleMap, tdot: FourierVector, deltas=DEFAULT_DELTAS, *,
                        ctx: ResponseContext | None = None, N: int = 512, fine_factor: int = 8,
                        derivative: str = "spectral", formula: FourierVector | None = None) -> FDReport:
    """``||(f_delta - f_0)/delta - R(tdot)||_{L^1}`` along a ladder of steps.

    The quotients differentiate the assembled matrices exactly, so the default
    compares them with the spectrally differentiated formula.  ``formula``
    replaces the computed ``R(tdot)``.
    """
    ctx = _context(map_, ctx, N, fine_factor, derivative)
    R = density_response(ctx, tdot) if formula is None else formula
    M = ctx.Lhat.fine_factor * ctx.N
    errors = []
    for d in deltas:
        f_d = invariant_density(assemble(perturb(ctx.map, tdot, d), ctx.N, ctx.Lhat.fine_factor))
        errors.append(l1_distance((f_d - ctx.f0) / d, R, M))
    return FDReport("density", list(map(float, deltas)), errors,
                    extra={"response_l1": l1_distance(R, FourierVector.zeros(ctx.N), M)})


def track_eigenvalue(ev: np.ndarray, reference: complex) -> complex:
    """Eigenvalue of ``ev`` nearest ``reference``; refuses ambiguous matches."""
    d = np.abs(ev - reference)
    order = np.argsort(d)
    if ev.size > 1 and d[order[1]] - d[order[0]] < TRACKING_TOL:
        raise SpectralGapError(
            f"two eigenvalues within {TRACKING_TOL} of the tracked value {reference:.6g}")
    return ev[order[0]]


def _eigen_path(map_, tdot, deltas, lam0, N, fine_factor):
    # continue from delta = 0 outward, smallest step first
    out = {}
    ref = lam0
    for d in sorted(deltas, key=abs):
        lam = track_eigenvalue(assemble(perturb(map_, tdot, d), N, fine_factor).eigvals(), ref)
        out[d] = lam
        ref = lam
    return out


def fd_eigenvalue_response(map_: CircleMap, lambda0_target: float, tdot: FourierVector,
                           deltas=DEFAULT_DELTAS, *, ctx: ResponseContext | None = None, N: int = 512,
                           fine_factor: int = 8, derivative: str = "spectral",
                           formula: float | None = None) -> FDReport:
    """Forward quotients ``(lambda_delta - lambda_0)/delta`` against ``phi_0(Ldot v_0)``.

    Symmetric quotients ``(lambda_delta - lambda_{-delta}) / (2 delta)`` are
    reported in ``extra`` as a diagnostic.
    """
    ctx = _context(map_, ctx, N, fine_factor, derivative, lambda0_target)
    eig = ctx.require_eigen()
    value = eigenvalue_response(ctx, tdot) if formula is None else float(formula)
    lam0 = eig.lambda0
    deltas = [float(d) for d in deltas]
    if not tdot.coeffs.any():
        return FDReport("eigenvalue", deltas, [0.0] * len(deltas), value, [0.0] * len(deltas))
    path = _eigen_path(ctx.map, tdot, deltas, lam0, ctx.N, ctx.Lhat.fine_factor)
    back = _eigen_path(ctx.map, tdot, [-d for d in deltas], lam0, ctx.N, ctx.Lhat.fine_factor)
    q = [float(np.real(path[d] - lam0) / d) for d in deltas]
    qc = [float(np.real(path[d] - back[-d]) / (2 * d)) for d in deltas]
    errors = [abs(x - value) for x in q]
    return FDReport("eigenvalue", deltas, errors, value, q,
                    extra={"lambda0": lam0, "central_quotients": qc,
                           "central_errors": [abs(x - value) for x in qc]})


# Ulam ------------------------------------------------------------------------

def ulam_matrix(map_: CircleMap, edges: np.ndarray) -> sp.csr_matrix:
    """Row-stochastic Ulam matrix: ``P[i, j] = m(B_i and T^{-1} B_j) / m(B_i)``.

    Overlaps are exact: the preimages of all bin edges cut ``[0, 1)`` into
    pieces that each land inside a single bin.
    """
    edges = np.asarray(edges, dtype=float)
    K = edges.size - 1
    d = map_.degree
    t0 = float(map_.lift(0.0))
    # every translate of a bin edge that lies in [T(0), T(0) + d]
    k0 = math.floor(t0)
    targets = (edges[:-1][None, :] + np.arange(k0, k0 + d + 2)[:, None]).ravel()
    labels = np.tile(np.arange(K), d + 2)
    keep = (targets > t0) & (targets < t0 + d)
    targets, labels = targets[keep], labels[keep]
    order = np.argsort(targets)
    targets, labels = targets[order], labels[order]
    cuts = np.clip(map_.inverse_lift(targets), 0.0, 1.0)
    # piece p = [cuts[p-1], cuts[p]] maps into bin labels[p-1]; piece 0 into the bin of T(0)
    first = int(np.searchsorted(edges, t0 - math.floor(t0), side="right") - 1)
    piece_bin = np.concatenate([[first], labels])
    pts = np.union1d(np.concatenate([[0.0, 1.0], cuts]), edges)
    mids = 0.5 * (pts[:-1] + pts[1:])
    lengths = np.diff(pts)
    src = np.clip(np.searchsorted(edges, mids, side="right") - 1, 0, K - 1)
    dst = piece_bin[np.searchsorted(cuts, mids, side="right")]
    widths = np.diff(edges)
    P = sp.coo_matrix((lengths / widths[src], (src, dst)), shape=(K, K)).tocsr()
    return P


def ulam_density(map_: CircleMap, bins: int = 2**14, edges=None, tol: float = 1e-12,
                 max_iter: int = 100_000) -> tuple[np.ndarray, np.ndarray]:
    """Invariant density as a step function ``(edges, values)`` with unit integral.

    ``edges`` overrides the uniform partition with ``bins`` cells.
    """
    if edges is None:
        if bins < 2**12:
            raise ValueError("use at least 4096 bins")
        edges = np.linspace(0.0, 1.0, bins + 1)
    edges = np.asarray(edges, dtype=float)
    if edges[0] != 0.0 or edges[-1] != 1.0 or np.any(np.diff(edges) <= 0):
        raise ValueError("edges must increase from 0 to 1")
    P = ulam_matrix(map_, edges).T.tocsr()
    widths = np.diff(edges)
    p = widths.copy()
    for _ in range(max_iter):
        q = P @ p
        q /= q.sum()
        if np.abs(q - p).sum() < tol:
            p = q
            break
        p = q
    else:
        raise SpectralGapError("Ulam power iteration did not converge")
    return edges, p / widths

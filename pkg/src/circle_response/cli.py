"""Command-line front end.

Verbs: ``spectrum``, ``density``, ``optimize-expect``, ``optimize-eig`` and
``validate``.  Settings come from a JSON config (``--config``); the flags
``--preset``, ``--gamma``, ``--grid-size`` and ``--seed`` override it.

Exit codes: 0 ok, 2 configuration error, 3 numerical failure, 4 degenerate
objective, 5 failed validation.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .adjoint import eigen_data
from .circle_map import CircleMap, check_expanding, map_from_dict, min_derivative
from .exceptions import MarkovError, NotExpandingError, NumericalError
from .fourier import FourierVector, grid
from .optimizer import (
    objective_certificate,
    optimal_eigenvalue_perturbation,
    optimal_expectation_perturbation,
)
from .oracle import DEFAULT_DELTAS, fd_density_response, fd_eigenvalue_response
from .response import ResponseContext, density_response, eigenvalue_response, observable
from .transfer import spectrum, write_spectrum_csv

log = logging.getLogger("circle_response")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL, EXIT_DEGENERATE, EXIT_VALIDATION = 0, 2, 3, 4, 5


class ConfigError(ValueError):
    pass


class DegenerateObjective(Exception):
    pass

class ValidationFailed(Exception):
    pass


@dataclass
class RunConfig:
    map: dict = field(default_factory=lambda: {"preset": "sticky2x"})
    N: int = 512
    fine_factor: int = 8
    observable: object = "cos"
    gammas: list = field(default_factory=lambda: [1.0])
    target_eigenvalue: float | None = None
    deltas: list = field(default_factory=lambda: list(DEFAULT_DELTAS))
    derivative: str = "central"
    seed: int = 0
    trials: int = 100
    tdot: object = "optimal"
    corrupt_sign: bool = False
    out: str = "."

    KEYS = ("map", "N", "fine_factor", "observable", "gammas", "target_eigenvalue", "deltas",
            "derivative", "seed", "trials", "tdot", "corrupt_sign", "out")

    @classmethod
    def from_dict(cls, d: dict) -> RunConfig:
        unknown = set(d) - set(cls.KEYS)
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        cfg = cls(**d)
        if isinstance(cfg.map, str):
            cfg.map = {"preset": cfg.map}
        cfg.validate()
        return cfg

    def validate(self) -> None:
        if not isinstance(self.map, dict):
            raise ConfigError("map must be a preset name or a map object")
        if not isinstance(self.N, int) or self.N < 16 or self.N % 2:
            raise ConfigError(f"N must be an even integer >= 16, got {self.N!r}")
        if not isinstance(self.fine_factor, int) or self.fine_factor < 1:
            raise ConfigError("fine_factor must be a positive integer")
        if not self.gammas or any(not isinstance(g, (int, float)) or g <= 0 for g in self.gammas):
            raise ConfigError("gammas must be a non-empty list of positive numbers")
        if self.derivative not in ("central", "spectral"):
            raise ConfigError("derivative must be 'central' or 'spectral'")
        d = self.deltas
        if not d or any(x <= 0 for x in d) or any(b >= a for a, b in zip(d, d[1:])):
            raise ConfigError("deltas must be positive and strictly decreasing")
        if not isinstance(self.seed, int) or self.seed < 0 or self.seed >= 2**64:
            raise ConfigError("seed must be an unsigned 64-bit integer")
        if self.trials < 1:
            raise ConfigError("trials must be >= 1")

    def build_map(self) -> CircleMap:
        try:
            m = map_from_dict(self.map)
        except (NotExpandingError, MarkovError):
            raise
        except (KeyError, ValueError, TypeError) as exc:
            raise ConfigError(f"invalid map: {exc}") from exc
        check_expanding(m)
        return m

    def build_observable(self, N: int) -> FourierVector:
        obs = self.observable
        try:
            if isinstance(obs, str):
                return observable(obs, N)
            if isinstance(obs, dict) and "coefficients" in obs:
                c = np.zeros(N, dtype=complex)
                for n, re, im in obs["coefficients"]:
                    c[int(n) + N // 2 - 1] = re + 1j * im
                v = FourierVector(c)
            elif isinstance(obs, dict):
                v = FourierVector.from_trig(N, obs.get("const", 0.0), obs.get("cos", ()), obs.get("sin", ()))
            else:
                raise ConfigError(f"cannot interpret observable {obs!r}")
        except (KeyError, ValueError, TypeError, IndexError) as exc:
            raise ConfigError(f"invalid observable: {exc}") from exc
        if not v.is_real(1e-12):
            raise ConfigError("observable must be real-valued")
        return v


def load_config(args) -> RunConfig:
    d = {}
    if args.config:
        try:
            with open(args.config) as fh:
                d = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config: {exc}") from exc
        if not isinstance(d, dict):
            raise ConfigError("config must be a JSON object")
    if args.preset:
        d["map"] = {"preset": args.preset}
    if args.gamma:
        try:
            d["gammas"] = [float(g) for g in args.gamma.split(",")]
        except ValueError as exc:
            raise ConfigError(f"bad --gamma list: {args.gamma}") from exc
    if args.grid_size is not None:
        d["N"] = args.grid_size
    if args.seed is not None:
        d["seed"] = args.seed
    if args.out:
        d["out"] = args.out
    try:
        return RunConfig.from_dict(d)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc


# output helpers ---------------------------------------------------------------

def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=1, sort_keys=True) + "\n")


def _write_samples(path: Path, columns: dict) -> None:
    names = list(columns)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(names)
        for row in zip(*columns.values()):
            w.writerow([repr(float(v)) for v in row])


def _gamma_tag(g: float) -> str:
    return f"{g:g}".replace(".", "p")


def essential_bound(map_: CircleMap) -> float:
    return 1.0 / min_derivative(map_)


def _auto_target(ctx_ev: np.ndarray, bound: float) -> float:
    real = [z.real for z in ctx_ev if abs(z.imag) < 1e-8 and abs(z - 1.0) > 1e-6 and abs(z) > bound]
    if not real:
        raise ConfigError(f"no real eigenvalue above the essential bound {bound:.6g}")
    return max(real, key=abs)


# commands -----------------------------------------------------------------------

def cmd_spectrum(cfg: RunConfig, out: Path) -> dict:
    m = cfg.build_map()
    ctx = ResponseContext.build(m, cfg.N, cfg.fine_factor)
    ev = spectrum(ctx.Lhat)
    write_spectrum_csv(out / "spectrum.csv", ev)
    bound = essential_bound(m)
    top = ev[: min(20, ev.size)]
    summary = {
        "map": m.to_dict(),
        "N": cfg.N,
        "fine_factor": cfg.fine_factor,
        "essential_bound": bound,
        "second_modulus": float(abs(ev[1])),
        "leading": [[float(z.real), float(z.imag)] for z in top],
    }
    _write_json(out / "spectrum.json", summary)
    _write_density(ctx, out)
    return summary


def _write_density(ctx: ResponseContext, out: Path, resolution: int | None = None) -> dict:
    M = resolution or 2 * ctx.N
    f = ctx.f0.samples(M).real
    _write_samples(out / "density.csv", {"x": grid(M), "density": f})
    return {"N": ctx.N, "residual": ctx.residual(), "min": float(f.min()), "max": float(f.max()),
            "argmax": float(grid(M)[np.argmax(f)])}


def cmd_density(cfg: RunConfig, out: Path) -> dict:
    ctx = ResponseContext.build(cfg.build_map(), cfg.N, cfg.fine_factor)
    summary = _write_density(ctx, out)
    _write_json(out / "density.json", summary)
    return summary


def _emit_results(results, out: Path, extra: dict) -> dict:
    rows = []
    for r in results:
        tag = _gamma_tag(r.gamma)
        r.to_csv(out / f"tdot_gamma{tag}.csv")
        r.to_json(out / f"result_gamma{tag}.json")
        rows.append({"gamma": r.gamma, "nu": r.nu, "objective": r.objective,
                     "constraint": r.constraint(), "stationarity": r.stationarity_residual()})
    obj = [r["objective"] for r in rows]
    order = np.argsort([r["gamma"] for r in rows])
    summary = dict(extra, results=rows,
                   monotone=bool(all(obj[order[i]] < obj[order[i + 1]] for i in range(len(obj) - 1))))
    _write_json(out / "summary.json", summary)
    return summary


def cmd_optimize_expectation(cfg: RunConfig, out: Path) -> dict:
    ctx = ResponseContext.build(cfg.build_map(), cfg.N, cfg.fine_factor, derivative=cfg.derivative)
    c = cfg.build_observable(cfg.N)
    results = []
    for g in cfg.gammas:
        r = optimal_expectation_perturbation(ctx, c, float(g))
        if r.degenerate:
            raise DegenerateObjective("the response of this observable vanishes for every perturbation")
        results.append(r)
    cert = objective_certificate(ctx, results[0], cfg.trials, cfg.seed, c)
    return _emit_results(results, out, {"kind": "expectation", "observable": cfg.observable,
                                        "N": cfg.N, "certificate_max_ratio": cert.max_ratio})


def cmd_optimize_eigenvalue(cfg: RunConfig, out: Path) -> dict:
    m = cfg.build_map()
    ctx = ResponseContext.build(m, cfg.N, cfg.fine_factor, derivative=cfg.derivative)
    bound = essential_bound(m)
    target = cfg.target_eigenvalue
    if target is None:
        target = _auto_target(ctx.Lhat.eigvals(), bound)
    elif abs(target) <= bound:
        raise ConfigError(f"target eigenvalue {target} is not above the essential bound {bound:.6g}")
    ctx = ResponseContext(m, ctx.Lhat, ctx.f0, _eigen(ctx, target), cfg.derivative)
    if abs(ctx.eigen.lambda0) <= bound:
        raise ConfigError(f"eigenvalue {ctx.eigen.lambda0:.6g} is not above the essential bound {bound:.6g}")
    results = [optimal_eigenvalue_perturbation(ctx, float(g)) for g in cfg.gammas]
    if any(r.degenerate for r in results):
        raise DegenerateObjective("the eigenvalue response vanishes for every perturbation")
    ctx.eigen.to_csv(out / "eigenfunctions.csv")
    return _emit_results(results, out, {"kind": "eigenvalue", "lambda0": ctx.eigen.lambda0,
                                        "essential_bound": bound, "N": cfg.N})


def _eigen(ctx, target):
    return eigen_data(ctx.Lhat, target)


def _validation_tdot(cfg: RunConfig, ctx: ResponseContext) -> FourierVector:
    t = cfg.tdot
    if t == "zero":
        return FourierVector.zeros(cfg.N)
    if t == "optimal":
        r = optimal_expectation_perturbation(ctx, cfg.build_observable(cfg.N), float(cfg.gammas[0]))
        if r.degenerate:
            raise DegenerateObjective("no optimal perturbation: the objective is degenerate")
        return r.tdot
    if isinstance(t, dict):
        try:
            return FourierVector.from_trig(cfg.N, t.get("const", 0.0), t.get("cos", ()), t.get("sin", ()))
        except (ValueError, TypeError) as exc:
            raise ConfigError(f"invalid tdot: {exc}") from exc
    raise ConfigError(f"tdot must be 'optimal', 'zero' or a trig object, got {t!r}")


def cmd_validate(cfg: RunConfig, out: Path) -> dict:
    m = cfg.build_map()
    ctx = ResponseContext.build(m, cfg.N, cfg.fine_factor, derivative=cfg.derivative)
    tdot = _validation_tdot(cfg, ctx)
    # finite differences of the assembled matrices converge to the spectral formula
    check = ctx.with_derivative("spectral")
    sign = -1.0 if cfg.corrupt_sign else 1.0
    R = density_response(check, tdot) * sign
    rep = fd_density_response(m, tdot, cfg.deltas, ctx=check, formula=R)
    rep.to_json(out / "fd_density.json")
    reports = {"density": rep.passed()}
    if cfg.target_eigenvalue is not None:
        eig_ctx = ResponseContext(m, ctx.Lhat, ctx.f0, _eigen(ctx, cfg.target_eigenvalue), "spectral")
        erep = fd_eigenvalue_response(m, cfg.target_eigenvalue, tdot, cfg.deltas, ctx=eig_ctx,
                                      formula=sign * eigenvalue_response(eig_ctx, tdot))
        erep.to_json(out / "fd_eigenvalue.json")
        reports["eigenvalue"] = erep.passed()
    summary = {"passed": all(reports.values()), "checks": reports, "deltas": list(cfg.deltas)}
    _write_json(out / "validate.json", summary)
    if not summary["passed"]:
        raise ValidationFailed(summary)
    return summary


COMMANDS = {
    "spectrum": cmd_spectrum,
    "density": cmd_density,
    "optimize-expect": cmd_optimize_expectation,
    "optimize-eig": cmd_optimize_eigenvalue,
    "validate": cmd_validate,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="circle-response", description=__doc__.splitlines()[0])
    p.add_argument("command", choices=sorted(COMMANDS))
    p.add_argument("--config", help="JSON run configuration")
    p.add_argument("--out", help="output directory (created if missing)")
    p.add_argument("--preset", help="map preset name")
    p.add_argument("--gamma", help="comma-separated weights, e.g. 1,25,50,200")
    p.add_argument("--grid-size", type=int, help="number of Fourier modes N")
    p.add_argument("--seed", type=int, help="seed for randomized checks")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        cfg = load_config(args)
        out = Path(cfg.out)
        out.mkdir(parents=True, exist_ok=True)
        summary = COMMANDS[args.command](cfg, out)
        log.info("%s: %s", args.command, json.dumps(summary, default=str)[:400])
        return EXIT_OK
    except ValidationFailed as exc:
        print(f"validation failed: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except DegenerateObjective as exc:
        print(f"degenerate: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    except (ConfigError, NotExpandingError, MarkovError, KeyError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (ValueError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())

"""Command-line front end.

    tasepnum prob --config run.yaml --format json
    tasepnum limit --config lim.yaml --out lim.csv --format csv

A config is a YAML (or JSON) mapping.  Recognised keys:

    initial:      step | flat | [y_1, y_2, ...]        (finite-time commands)
    N:            particle count for step/flat initial data
    observations: list of {k, a, t} or of {site, height, t} (height coordinates)
    outside:      1-based z indices taken outside the unit circle (signed)
    L:            ring period (periodic, and mc/oracle on a ring)
    kind:         step | flat                           (limit, converge)
    points:       list of {x, tau, h}                   (limit, converge)
    T:            list of T values                      (converge)
    method:       ctmc | poisson                        (oracle)
    plan:         {nodes, rmin, rmax, z_nodes, panels, order}

Flags on the command line override the matching keys.  JSON output is
deterministic apart from the ``timestamp`` field.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import sys
import time
import warnings
from datetime import datetime, timezone
from typing import Any

import numpy as np
import yaml

from . import limits, multipoint, periodic, simulate, symfunc
from .errors import (ConditioningError, ConvergenceError, InvalidInput, NumericalDomain,
                     NumericalQualityWarning, TasepError, Unsupported)
from .multipoint import ObservationSet, height_to_particle
from .quadrature import ContourPlan
from .symfunc import ParticleConfig

CSV_COLUMNS = ("config-hash", "command", "value", "imag-residue", "error", "runtime-ms")
CSV_VERSION = "1"
EXIT_OK, EXIT_CONFIG, EXIT_QUALITY, EXIT_UNSUPPORTED = 0, 2, 3, 4
COMMANDS = ("prob", "signed", "periodic", "limit", "mc", "oracle", "verify", "converge")


class QualityFailure(TasepError):
    """A result was produced but failed its quality threshold."""


# config ----------------------------------------------------------------------------

def load_config(path: str | None) -> dict:
    if path is None:
        return {}
    try:
        with open(path) as fh:
            data = yaml.safe_load(fh)
    except (OSError, yaml.YAMLError) as exc:
        raise InvalidInput(f"cannot read config {path}: {exc}") from exc
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise InvalidInput("config must be a mapping")
    return data


def config_hash(cfg: dict) -> str:
    blob = json.dumps(cfg, sort_keys=True, default=str).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


def _initial(cfg: dict) -> ParticleConfig:
    init = cfg.get("initial", "step")
    if isinstance(init, list):
        return ParticleConfig(tuple(int(y) for y in init))
    n = cfg.get("N")
    if init not in ("step", "flat"):
        raise InvalidInput(f"initial must be step, flat or a list, got {init!r}")
    if n is None:
        raise InvalidInput("step/flat initial data needs N")
    return ParticleConfig.step(int(n)) if init == "step" else ParticleConfig.flat(int(n))


def _observations(cfg: dict) -> ObservationSet:
    rows = cfg.get("observations")
    if not rows:
        raise InvalidInput("config needs a non-empty observations list")
    triples = []
    for row in rows:
        if not isinstance(row, dict) or "t" not in row:
            raise InvalidInput(f"bad observation {row!r}")
        if "height" in row:
            k, a = height_to_particle(int(row["site"]), int(row["height"]))
        elif "k" in row and "a" in row:
            k, a = int(row["k"]), int(row["a"])
        else:
            raise InvalidInput(f"observation needs (k, a) or (site, height): {row!r}")
        triples.append((k, a, float(row["t"])))
    return ObservationSet.of(triples)


def _limit_obs(cfg: dict) -> limits.LimitObservation:
    pts = cfg.get("points")
    if not pts:
        raise InvalidInput("limit commands need a points list")
    try:
        return limits.LimitObservation.of([(p["x"], p["tau"], p["h"]) for p in pts])
    except (KeyError, TypeError) as exc:
        raise InvalidInput(f"points need x, tau and h: {exc}") from exc


def _plan(cfg: dict, m: int, flat: bool = False) -> ContourPlan:
    p = dict(cfg.get("plan") or {})
    kw = {k: p[k] for k in ("nodes", "rmin", "rmax") if k in p}
    extra = {k: p[k] for k in ("z_nodes",) if k in p}
    return ContourPlan.default(m, reflect=flat, **kw, **extra)


def _ray_plan(cfg: dict, m: int) -> limits.RayContourPlan:
    p = dict(cfg.get("plan") or {})
    kw = {k: p[k] for k in ("panels", "order") if k in p}
    return limits.RayContourPlan.default(m, **kw)


# commands -------------------------------------------------------------------------

def _result_record(res: multipoint.ProbabilityResult) -> dict:
    return res.to_dict()


def cmd_prob(cfg: dict) -> dict:
    Y, obs = _initial(cfg), _observations(cfg)
    flat = cfg.get("initial") == "flat"
    if flat:
        res = multipoint.flat_probability(obs, _plan(cfg, obs.m, True), n_particles=Y.N)
    else:
        res = multipoint.joint_probability(Y, obs, _plan(cfg, obs.m))
    return _result_record(res)


def cmd_signed(cfg: dict) -> dict:
    Y, obs = _initial(cfg), _observations(cfg)
    outside = [int(s) for s in cfg.get("outside", [])]
    res = multipoint.joint_probability(Y, obs, _plan(cfg, obs.m), outside=outside)
    return _result_record(res)


def cmd_periodic(cfg: dict) -> dict:
    Y, obs = _initial(cfg), _observations(cfg)
    L = int(cfg["L"]) if "L" in cfg else periodic.admissible_period(Y, obs)
    res = periodic.periodic_probability(Y, periodic.PeriodicParams(L, Y.N), obs)
    out = _result_record(res)
    out["L"] = L
    return out


def cmd_limit(cfg: dict) -> dict:
    obs = _limit_obs(cfg)
    kind = cfg.get("kind", "step")
    return _result_record(limits.f_limit(kind, obs, _ray_plan(cfg, obs.m)))


def cmd_mc(cfg: dict) -> dict:
    Y, obs = _initial(cfg), _observations(cfg)
    seed, samples = int(cfg.get("seed", 0)), int(cfg.get("samples", 10 ** 5))
    p, se = simulate.mc_joint(Y, obs, seed=seed, samples=samples, L=cfg.get("L"))
    return {"value": p, "error": se, "imag_residue": 0.0, "provenance": "monte-carlo",
            "meta": {"seed": seed, "samples": samples, "L": cfg.get("L")}}


def cmd_oracle(cfg: dict) -> dict:
    Y, obs = _initial(cfg), _observations(cfg)
    method = cfg.get("method", "ctmc")
    if method == "poisson":
        if Y.N != 1:
            raise Unsupported("the Poisson oracle needs one particle")
        b = [a - Y.positions[0] for a in obs.a]
        return {"value": simulate.poisson_joint(b, obs.t), "error": 1e-15,
                "imag_residue": 0.0, "provenance": "poisson", "meta": {}}
    if method != "ctmc":
        raise InvalidInput(f"unknown oracle {method!r}")
    tol = float(cfg.get("tol", 1e-10))
    val, cert = simulate.ctmc_exact(Y, obs, tol=tol, L=cfg.get("L"), return_certificate=True)
    return {"value": val, "error": cert.total, "imag_residue": 0.0, "provenance": "ctmc",
            "meta": {"certificate": cert.to_dict()}}


# verification suite: (name, threshold, thunk) -------------------------------------

def _verify_cases(seed: int) -> list[tuple[str, float, Any]]:
    rng = np.random.default_rng(seed)
    Y2 = ParticleConfig((0, -2))
    obs2 = ObservationSet.of([(1, 1, 0.8), (2, 0, 1.5)])
    Y3 = ParticleConfig((1, -1, -2))
    u = complex(0.3 * np.exp(1j * rng.uniform(0, 2 * np.pi)) - 0.5)
    obs_series = ObservationSet.of([(1, 0, 1.0), (1, 2, 2.0)])
    # the series quadrature is tensor-product, so its circles sit closer together
    series_plan = ContourPlan.default(2, nodes=64, rmin=0.15, rmax=0.4)
    cases = [
        ("poisson-m1", 1e-8, lambda: abs(
            multipoint.joint_probability(ParticleConfig((-1,)),
                                         ObservationSet.of([(1, 1, 2.0)])).value
            - simulate.poisson_tail(2, 2.0))),
        ("orthogonality", 1e-10, lambda: max(symfunc.orthogonality_residual(Y3, u, i)
                                             for i in (1, 2, 3))),
    ]
    inv = {}

    def invariance(key):
        def run():
            if not inv:
                inv.update(multipoint.invariance_suite(Y2, obs2, seed=seed))
            return inv[key]
        return run

    for key, thr in (("reorder", 1e-8), ("scaling", 1e-10), ("shift", 1e-10), ("null", 1e-8)):
        cases.append((f"invariance-{key}", thr, invariance(key)))
    cases += [
        ("reduction-z1", 1e-8, lambda: multipoint.reduction_identity_residual(Y2, obs2, 1)),
        ("fredholm-vs-series", 1e-6, lambda: abs(
            multipoint.dy_fredholm(ParticleConfig((-1,)), obs_series, [0.3 + 0.2j], series_plan)
            - multipoint.dy_series(ParticleConfig((-1,)), obs_series, [0.3 + 0.2j],
                                   series_plan))),
        ("periodic-collapse", 1e-6, lambda: periodic.large_period_residual(
            ParticleConfig((-1,)), periodic.PeriodicParams(3, 1),
            ObservationSet.of([(1, 0, 1.0)]))),
        ("limit-tail", 1e-4, lambda: abs(1 - limits.f_limit(
            "step", limits.LimitObservation.of([(0.0, 1.0, 8.0)])).value)),
    ]
    return cases


def cmd_verify(cfg: dict) -> dict:
    seed = int(cfg.get("seed", 0))
    rows = []
    worst = 0.0
    for name, thr, thunk in _verify_cases(seed):
        res = float(thunk())
        rows.append({"name": name, "residual": res, "threshold": thr, "ok": res < thr})
        worst = max(worst, res / thr)
    ok = all(r["ok"] for r in rows)
    out = {"value": float(ok), "error": 0.0, "imag_residue": 0.0, "provenance": "verify",
           "meta": {"seed": seed, "residuals": rows, "worst_ratio": worst}}
    if not ok:
        out["failed"] = [r["name"] for r in rows if not r["ok"]]
    return out


def cmd_converge(cfg: dict) -> dict:
    obs = _limit_obs(cfg)
    kind = cfg.get("kind", "step")
    Ts = [float(T) for T in cfg.get("T", [8, 16, 32])]
    table = limits.convergence_probe(kind, obs, Ts, _ray_plan(cfg, obs.m))
    gaps = table.gaps
    return {"value": gaps[-1], "error": 0.0, "imag_residue": 0.0, "provenance": "converge",
            "meta": table.to_dict()}


HANDLERS = {"prob": cmd_prob, "signed": cmd_signed, "periodic": cmd_periodic,
            "limit": cmd_limit, "mc": cmd_mc, "oracle": cmd_oracle, "verify": cmd_verify,
            "converge": cmd_converge}


# output ----------------------------------------------------------------------------

def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (np.floating, float)):
        return float(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (complex, np.complexfloating)):
        return [float(x.real), float(x.imag)]
    if isinstance(x, np.bool_):
        return bool(x)
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    return x


def render(record: dict, fmt: str, runtime_ms: float) -> str:
    if fmt == "json":
        return json.dumps(_jsonable(record), sort_keys=True, indent=2) + "\n"
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    writer.writerow([record["config_hash"], record["command"], repr(float(record["value"])),
                     repr(float(record.get("imag_residue", 0.0))),
                     repr(float(record.get("error", 0.0))), f"{runtime_ms:.1f}"])
    return buf.getvalue()


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="tasepnum", description=__doc__.split("\n")[0])
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("--config", help="YAML or JSON run configuration")
    ap.add_argument("--out", help="write the result here instead of stdout")
    ap.add_argument("--format", choices=("json", "csv"), default="json")
    ap.add_argument("--tol", type=float, help="tolerance override")
    ap.add_argument("--nodes", type=int, help="circle nodes per contour")
    ap.add_argument("--seed", type=int, help="random seed")
    ap.add_argument("--samples", type=int, help="Monte Carlo samples")
    return ap


def _merge(cfg: dict, args: argparse.Namespace) -> dict:
    cfg = dict(cfg)
    cfg["command"] = args.command
    if args.tol is not None:
        cfg["tol"] = args.tol
    if args.seed is not None:
        cfg["seed"] = args.seed
    if args.samples is not None:
        cfg["samples"] = args.samples
    if args.nodes is not None:
        cfg["plan"] = {**(cfg.get("plan") or {}), "nodes": args.nodes}
    return cfg


def _emit(text: str, path: str | None) -> None:
    if path:
        with open(path, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    code = EXIT_OK
    try:
        cfg = _merge(load_config(args.config), args)
        start = time.perf_counter()
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always", NumericalQualityWarning)
            record = HANDLERS[args.command](cfg)
        runtime_ms = 1e3 * (time.perf_counter() - start)
        quality = [str(w.message) for w in caught
                   if issubclass(w.category, NumericalQualityWarning)]
        record.update({"command": args.command, "config_hash": config_hash(cfg),
                       "csv_version": CSV_VERSION, "quality_warnings": quality,
                       "timestamp": datetime.now(timezone.utc).isoformat(timespec="seconds")})
        if quality or record.get("failed"):
            code = EXIT_QUALITY
        _emit(render(record, args.format, runtime_ms), args.out)
    except (InvalidInput, KeyError, TypeError, ValueError) as exc:
        code = _error(EXIT_CONFIG, exc, args)
    except Unsupported as exc:
        code = _error(EXIT_UNSUPPORTED, exc, args)
    except (ConvergenceError, ConditioningError, NumericalDomain, QualityFailure,
            TasepError) as exc:
        code = _error(EXIT_QUALITY, exc, args)
    return code


def _error(code: int, exc: Exception, args: argparse.Namespace) -> int:
    rec = {"command": args.command, "error": type(exc).__name__, "message": str(exc),
           "exit_code": code}
    sys.stderr.write(json.dumps(rec, sort_keys=True) + "\n")
    return code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())

"""Command-line front end.

Subcommands: ``systems list``, ``analyze``, ``classify`` and ``suite``.
Configuration comes from an optional JSON file (``--config``); flags
override file values and mirror its keys (``--horizon`` sets ``horizon``).

Exit codes: 0 success, 1 a suite criterion failed, 2 configuration error,
3 insufficient data.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
import time
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from .classify import (
    Thresholds,
    consistency_check,
    dc_verdict,
    liyorke_verdict,
    scrambled_search,
    sdc_from_profile,
)
from .distfn import (
    GEOMETRIC_RATIO,
    SequenceSpec,
    checkpoint_schedule,
    distance_profile,
    distribution_estimate,
    effective_t_grid,
    profile_checkpoints,
)
from .errors import ConfigError, HorizonExceeded, InsufficientData
from .systems import DESCRIPTIONS, KINDS, SystemSpec, family_point, make_system
from .suite import HARNESSES, run_harness

EXIT_OK, EXIT_FAILED, EXIT_CONFIG, EXIT_DATA = 0, 1, 2, 3

DEFAULTS: dict[str, Any] = {
    "system": None,
    "pairs": [],
    "family": None,
    "count": None,
    "horizon": None,
    "t_grid": None,
    "checkpoint": {"policy": "geometric", "ratio": GEOMETRIC_RATIO, "burn_in": 0},
    "thresholds": {},
    "sequences": [],
    "out": "chaoskit-out",
    "seed": 0,
    "harness": [],
    "N": None,
    "flag": "dc1",
}


# -- serialization ----------------------------------------------------------------


def _clean(obj: Any) -> Any:
    """JSON-ready copy with floats rounded to 9 significant digits."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_clean(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        if not math.isfinite(v):
            return str(v)
        return float(f"{v:.9g}")
    return obj


def dumps(obj: Any) -> str:
    return json.dumps(_clean(obj), sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def _write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


# -- config resolution --------------------------------------------------------------


def _int(value: Any, field: str, minimum: int = 1) -> int:
    if isinstance(value, bool) or not isinstance(value, (int, str)):
        raise ConfigError(field, f"expected an integer, got {value!r}")
    try:
        out = int(value)
    except ValueError:
        raise ConfigError(field, f"expected an integer, got {value!r}") from None
    if out < minimum:
        raise ConfigError(field, f"must be >= {minimum}, got {out}")
    return out


def _parse_t_grid(text: str) -> Any:
    """``0.1,0.2,0.5`` or ``geom:MIN:MAX:POINTS``."""
    if text.startswith("geom:"):
        parts = text.split(":")[1:]
        if len(parts) != 3:
            raise ConfigError("t_grid", "geom form is geom:MIN:MAX:POINTS")
        return {"min": float(parts[0]), "max": float(parts[1]), "points": int(parts[2])}
    return [float(v) for v in text.split(",") if v]


def _parse_sequence(text: str) -> dict[str, Any]:
    """``arith:STEP[:START]`` or ``explicit:1,4,9``."""
    kind, _, rest = text.partition(":")
    if kind == "arith":
        parts = rest.split(":") if rest else ["1"]
        return {"kind": "arith", "step": int(parts[0]), "start": int(parts[1]) if len(parts) > 1 else 0}
    if kind == "explicit":
        return {"kind": "explicit", "values": [int(v) for v in rest.split(",") if v]}
    raise ConfigError("sequences", f"cannot parse sequence {text!r}")


def _parse_thresholds(text: str) -> dict[str, Any]:
    if text.lstrip().startswith("{"):
        return json.loads(text)
    out: dict[str, Any] = {}
    for item in text.split(","):
        key, sep, value = item.partition("=")
        if not sep:
            raise ConfigError("thresholds", f"expected key=value, got {item!r}")
        out[key.strip()] = int(value) if key.strip() == "j_min_width" else float(value)
    return out


def resolve_config(args: argparse.Namespace) -> dict[str, Any]:
    cfg = json.loads(json.dumps(DEFAULTS))
    if getattr(args, "config", None):
        try:
            data = json.loads(Path(args.config).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError("config", f"cannot read {args.config}: {exc}") from None
        if not isinstance(data, dict):
            raise ConfigError("config", "top level must be a JSON object")
        unknown = set(data) - set(DEFAULTS)
        if unknown:
            raise ConfigError(sorted(unknown)[0], "unknown config key")
        for key, value in data.items():
            if key in ("checkpoint", "thresholds") and isinstance(value, dict):
                cfg[key].update(value)
            else:
                cfg[key] = value

    try:
        if getattr(args, "system", None):
            spec = dict(cfg["system"]) if isinstance(cfg["system"], dict) else {}
            if spec.get("kind") != args.system:
                spec = {"kind": args.system}
            cfg["system"] = spec
        for flag, key in (("horizon_cap", "horizon_cap"), ("alpha", "alpha")):
            value = getattr(args, flag, None)
            if value is not None:
                if not cfg["system"]:
                    raise ConfigError(key, "needs --system")
                cfg["system"][key] = value
        if getattr(args, "base", None):
            if not cfg["system"]:
                raise ConfigError("base", "needs --system iterate")
            cfg["system"]["base"] = {"kind": args.base}
        if getattr(args, "pair", None):
            cfg["pairs"] = [p.split(",") for p in args.pair]
        for name in ("family", "count", "horizon", "seed", "out", "flag"):
            value = getattr(args, name, None)
            if value is not None:
                cfg[name] = value
        if getattr(args, "t_grid", None):
            cfg["t_grid"] = _parse_t_grid(args.t_grid)
        if getattr(args, "thresholds", None):
            cfg["thresholds"].update(_parse_thresholds(args.thresholds))
        if getattr(args, "sequence", None):
            cfg["sequences"] = [_parse_sequence(s) for s in args.sequence]
        if getattr(args, "burn_in", None) is not None:
            cfg["checkpoint"]["burn_in"] = args.burn_in
        if getattr(args, "checkpoint_policy", None):
            cfg["checkpoint"]["policy"] = args.checkpoint_policy
        if getattr(args, "harness", None):
            cfg["harness"] = [h for item in args.harness for h in item.split(",") if h]
        if getattr(args, "N", None):
            cfg["N"] = [int(v) for v in args.N.split(",") if v]
    except (ValueError, json.JSONDecodeError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError("flags", str(exc)) from None
    return _validate(cfg)


def _validate(cfg: dict[str, Any]) -> dict[str, Any]:
    cfg["seed"] = _int(cfg["seed"], "seed", minimum=0)
    for key in ("horizon", "family", "count"):
        if cfg[key] is not None:
            cfg[key] = _int(cfg[key], key)
    if cfg["N"] is not None:
        if isinstance(cfg["N"], int):
            cfg["N"] = [cfg["N"]]
        cfg["N"] = [_int(v, "N") for v in cfg["N"]]
    if isinstance(cfg["system"], str):
        cfg["system"] = {"kind": cfg["system"]}
    if cfg["system"] is not None:
        spec = dict(cfg["system"])
        if spec.get("kind") == "iterate" and "N" not in spec and cfg["N"]:
            spec["N"] = cfg["N"][0]
        if "horizon_cap" not in spec and cfg["horizon"] is not None:
            spec["horizon_cap"] = cfg["horizon"]
        if spec.get("base") and "horizon_cap" not in spec["base"] and "horizon_cap" in spec:
            spec["base"]["horizon_cap"] = spec["horizon_cap"] * int(spec.get("N") or 1)
        system = make_system(SystemSpec.from_dict(spec))
        cfg["system"] = system.spec.to_dict()
        if cfg["horizon"] is not None and cfg["horizon"] > system.horizon_cap:
            raise ConfigError("horizon", f"{cfg['horizon']} exceeds horizon_cap {system.horizon_cap}")
    th = Thresholds.from_dict(cfg["thresholds"])
    cfg["thresholds"] = th.to_dict()
    ck = cfg["checkpoint"]
    if ck.get("policy") not in ("geometric", "block_boundaries"):
        raise ConfigError("checkpoint.policy", f"unknown policy {ck.get('policy')!r}")
    ck["burn_in"] = _int(ck.get("burn_in", 0), "checkpoint.burn_in", minimum=0)
    if not float(ck.get("ratio", GEOMETRIC_RATIO)) > 1:
        raise ConfigError("checkpoint.ratio", "must exceed 1")
    grid = cfg["t_grid"]
    if isinstance(grid, dict):
        try:
            lo, hi, points = float(grid["min"]), float(grid["max"]), int(grid["points"])
        except (KeyError, TypeError, ValueError):
            raise ConfigError("t_grid", "object form needs min, max and points") from None
        if not 0 < lo < hi or points < 1:
            raise ConfigError("t_grid", "need 0 < min < max and points >= 1")
        cfg["t_grid_values"] = np.geomspace(lo, hi, points).tolist()
    elif grid is not None:
        values = [float(v) for v in grid]
        if not values or any(v <= 0 for v in values) or any(b <= a for a, b in zip(values, values[1:])):
            raise ConfigError("t_grid", "must be positive and strictly increasing")
        cfg["t_grid_values"] = values
    else:
        cfg["t_grid_values"] = None
    for i, s in enumerate(cfg["sequences"]):
        try:
            SequenceSpec.from_dict(s)
        except ConfigError as exc:
            raise ConfigError(f"sequences[{i}].{exc.field.split('.')[-1]}", str(exc)) from None
    for i, pair in enumerate(cfg["pairs"]):
        if not isinstance(pair, (list, tuple)) or len(pair) != 2:
            raise ConfigError(f"pairs[{i}]", "each pair needs exactly two points")
    return cfg


def _require(cfg: dict, *keys: str) -> None:
    for key in keys:
        if cfg.get(key) in (None, [], {}):
            raise ConfigError(key, "required")


def _public(cfg: dict) -> dict:
    return {k: v for k, v in cfg.items() if k != "t_grid_values"}


# -- subcommands ------------------------------------------------------------------------


def cmd_systems(args: argparse.Namespace) -> int:
    for kind in KINDS:
        print(f"{kind}\t{DESCRIPTIONS[kind]}")
    return EXIT_OK


def cmd_analyze(args: argparse.Namespace) -> int:
    cfg = resolve_config(args)
    _require(cfg, "system", "horizon", "pairs")
    if len(cfg["pairs"]) != 1:
        raise ConfigError("pairs", "analyze takes exactly one pair")
    system = make_system(SystemSpec.from_dict(cfg["system"]))
    a, b = cfg["pairs"][0]
    try:
        x, y = system.parse_point(str(a)), system.parse_point(str(b))
    except (ValueError, TypeError) as exc:
        raise ConfigError("pairs[0]", str(exc)) from None
    horizon = cfg["horizon"]
    th = Thresholds.from_dict(cfg["thresholds"])
    ck_cfg = cfg["checkpoint"]
    burn_in = ck_cfg["burn_in"]
    if burn_in >= horizon:
        raise ConfigError("checkpoint.burn_in", "must be below horizon")

    profile = distance_profile(system, x, y, horizon)
    grid = effective_t_grid(cfg["t_grid_values"], profile.resolution)
    if grid.size == 0:
        raise InsufficientData("t_grid: no grid value lies above the metric resolution")
    if ck_cfg["policy"] == "geometric":
        checkpoints = profile_checkpoints(profile, burn_in, float(ck_cfg["ratio"]))
    else:
        checkpoints = checkpoint_schedule(horizon, burn_in, "block_boundaries",
                                          boundaries=list(profile.boundaries) + [horizon])
    est = distribution_estimate(profile, grid, checkpoints, burn_in)
    verdict = dc_verdict(est, th, horizon)
    verdict.liyorke, verdict.liyorke_evidence = liyorke_verdict(profile, th, burn_in)
    for s in cfg["sequences"]:
        verdict.sdc.append(sdc_from_profile(profile, SequenceSpec.from_dict(s), th,
                                            cfg["t_grid_values"], burn_in))
    out = Path(cfg["out"])
    _write(out / "estimate.csv", est.to_csv())
    report = {"config": _public(cfg), "pair": [system.point_label(x), system.point_label(y)],
              "verdict": verdict.to_dict(), "estimate": est.to_dict(),
              "consistency_violations": consistency_check(verdict)}
    _write(out / "verdict.json", dumps(report))
    flags = ", ".join(f"{f}={getattr(verdict, f)}" for f in ("liyorke", "dc1", "dc2", "dc2prime", "dc3"))
    print(f"{system.name} {report['pair'][0]} {report['pair'][1]} horizon={horizon}: {flags}")
    return EXIT_OK


def cmd_classify(args: argparse.Namespace) -> int:
    cfg = resolve_config(args)
    _require(cfg, "system", "horizon")
    system = make_system(SystemSpec.from_dict(cfg["system"]))
    if cfg["family"]:
        if system.kind != "shift2":
            raise ConfigError("family", "the scrambled family lives in shift2")
        candidates = [family_point(cfg["seed"] * 1000 + k, system.horizon_cap) for k in range(cfg["family"])]
    elif cfg["pairs"]:
        candidates = [system.parse_point(str(p)) for pair in cfg["pairs"] for p in pair]
    else:
        rng = np.random.default_rng(cfg["seed"])
        candidates = [system.sample_point(rng) for _ in range(cfg["count"] or 8)]
    if cfg["flag"] not in ("liyorke", "dc1", "dc2", "dc2prime", "dc3"):
        raise ConfigError("flag", f"unknown flag {cfg['flag']!r}")
    result = scrambled_search(system, candidates, cfg["horizon"], Thresholds.from_dict(cfg["thresholds"]),
                              cfg["flag"], cfg["t_grid_values"])
    report = {"config": _public(cfg), "candidates": [system.point_label(c) for c in candidates],
              **result.to_dict()}
    _write(Path(cfg["out"]) / "classify.json", dumps(report))
    print(f"{cfg['flag']}-scrambled subset of size {len(result.members)} among {len(candidates)} candidates")
    return EXIT_OK


def cmd_suite(args: argparse.Namespace) -> int:
    cfg = resolve_config(args)
    _require(cfg, "harness")
    for name in cfg["harness"]:
        if name not in HARNESSES:
            raise ConfigError("harness", f"unknown harness {name!r}; expected one of {', '.join(sorted(HARNESSES))}")
    out = Path(cfg["out"])
    results, runtimes = [], {}
    for name in cfg["harness"]:
        start = time.perf_counter()
        results.append(run_harness(name, cfg))
        runtimes[name] = time.perf_counter() - start
    # single writer, after all computation
    criteria: dict[str, bool] = {}
    for res in results:
        _write(out / f"{res.harness}.json", dumps({"config": _public(cfg), **res.to_dict()}))
        for fname, text in res.files.items():
            _write(out / fname, text)
        criteria.update(res.criteria)
    passed = all(r.passed for r in results)
    summary = {"config": _public(cfg), "harnesses": {r.harness: r.passed for r in results},
               "criteria": criteria, "passed": passed}
    _write(out / "summary.json", dumps(summary))
    for key in sorted(criteria):
        print(f"{'PASS' if criteria[key] else 'FAIL'} {key}")
    for name, secs in runtimes.items():
        print(f"runtime {name}: {secs:.2f}s", file=sys.stderr)
    return EXIT_OK if passed else EXIT_FAILED


# -- parser -----------------------------------------------------------------------------


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON config file; flags override its values")
    p.add_argument("--system", choices=KINDS, help="system kind")
    p.add_argument("--horizon-cap", dest="horizon_cap", type=int, help="system horizon_cap (default: horizon)")
    p.add_argument("--alpha", type=float, help="rotation angle")
    p.add_argument("--base", choices=[k for k in KINDS if k != "iterate"], help="base system for iterate")
    p.add_argument("--horizon", type=int, help="number of iterates")
    p.add_argument("--pair", action="append", help="point pair a,b (repeatable)")
    p.add_argument("--family", type=int, help="number of shift2 scrambled-family points")
    p.add_argument("--count", type=int, help="number of sampled pairs or points")
    p.add_argument("--seed", type=int, help="random seed (default 0)")
    p.add_argument("--t-grid", dest="t_grid", help="comma list or geom:MIN:MAX:POINTS")
    p.add_argument("--thresholds", help="key=value list or JSON object")
    p.add_argument("--sequence", action="append", help="arith:STEP[:START] or explicit:1,2,3 (repeatable)")
    p.add_argument("--burn-in", dest="burn_in", type=int, help="checkpoint burn-in")
    p.add_argument("--checkpoint-policy", dest="checkpoint_policy", choices=("geometric", "block_boundaries"))
    p.add_argument("--N", help="iterate order(s), comma-separated")
    p.add_argument("--out", help="output directory")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="chaoskit", description="Finite-horizon distributional chaos toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    systems = sub.add_parser("systems", help="list built-in systems")
    systems.add_argument("action", choices=["list"])
    systems.set_defaults(func=cmd_systems)

    analyze = sub.add_parser("analyze", help="distribution functions and verdict for one pair")
    _common(analyze)
    analyze.set_defaults(func=cmd_analyze)

    classify = sub.add_parser("classify", help="greedy scrambled-subset search")
    _common(classify)
    classify.add_argument("--flag", help="flag every member pair must carry (default dc1)")
    classify.set_defaults(func=cmd_classify)

    suite = sub.add_parser("suite", help="run named harnesses")
    _common(suite)
    suite.add_argument("--harness", action="append", help=f"one of {', '.join(sorted(HARNESSES))} (repeatable)")
    suite.set_defaults(func=cmd_suite)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except HorizonExceeded as exc:
        print(f"config error: horizon: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except InsufficientData as exc:
        print(f"insufficient data: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())

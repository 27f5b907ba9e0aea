"""Command line entry point: ``python -m m1lab <subcommand>``.

Configuration is layered, later layers winning: preset, TOML file
(``--config``), environment variables, command line flags.  An environment
variable ``M1LAB_<SECTION>__<KEY>`` overrides ``[section] key``, e.g.
``M1LAB_EXPERIMENT__SEED=7``; its value is parsed as a TOML value and falls
back to a plain string.

Exit codes: 0 success, 1 usage or configuration error, 2 a ``converge``
threshold failed.
"""

from __future__ import annotations

import argparse
import copy
import datetime as _dt
import json
import os
import re
import sys
import tempfile
from pathlib import Path

import numpy as np
import tomli

from . import cadlag
from .harness import (
    ExperimentReport,
    FidiGrid,
    Thresholds,
    fidi_experiment,
    functional_convergence_experiment,
    self_distance_experiment,
)
from .heavytail import TailModel
from .limits import check_trunc_K, default_trunc_K, limit_spec, simulate_joint_limit
from .linproc import CoefficientSeq, joint_path, validate_coeffs
from .skorohod import METRICS

ENV_PREFIX = "M1LAB_"
EXPERIMENT_KINDS = ("fidi", "functional", "self_distance")

EXPERIMENT_DEFAULTS = {
    "kind": "fidi",
    "n": 1000,
    "n_list": [100, 1000, 10000],
    "grid": [0.5, 1.0],
    "N": 10000,
    "draws": 20,
    "seed": 0,
    "workers": 1,
    "mesh": None,
    "trunc": None,
    "trunc_K": None,
    "z_grid": [0.5, 1.0, 2.0],
    "sup_grid": 1000,
    "diagnostic": False,
}
SECTIONS = {
    "model": set(TailModel.__dataclass_fields__),
    "coeffs": set(CoefficientSeq.__dataclass_fields__),
    "experiment": set(EXPERIMENT_DEFAULTS),
    "thresholds": set(Thresholds.__dataclass_fields__),
    "output": {"json", "csv"},
}

PRESETS = {
    "iid_frechet": {
        "model": {"alpha": 1.5, "p": 1.0},
        "coeffs": {"kind": "finite", "values": [1.0]},
        "experiment": {"n_list": [100, 1000, 10000], "seed": 20240101},
        "thresholds": {"w_ks": 0.02},
    },
    "ma2_positive": {
        "model": {"alpha": 1.5, "p": 1.0},
        "coeffs": {"kind": "finite", "values": [1.0, 0.5, 0.25]},
        "experiment": {"n_list": [100, 1000, 10000], "seed": 20240102},
    },
    "geometric_negative": {
        "model": {"alpha": 1.5, "p": 0.3},
        "coeffs": {"kind": "geometric", "c": 1.0, "rho": 0.5, "sign": "nonpositive"},
        "experiment": {"n_list": [100, 1000, 10000], "seed": 20240103},
    },
    "alpha1_symmetric": {
        "model": {"alpha": 1.0, "p": 0.5},
        "coeffs": {"kind": "finite", "values": [1.0, 0.5]},
        "experiment": {"n_list": [100, 1000, 10000], "seed": 20240104},
    },
    "mixed_sign_diagnostic": {
        "model": {"alpha": 1.5, "p": 1.0},
        "coeffs": {"kind": "finite", "values": [1.0, -0.5], "allow_mixed": True},
        "experiment": {"kind": "functional", "n_list": [100, 1000, 10000], "diagnostic": True, "seed": 20240105},
    },
}


class ConfigError(ValueError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(f"usage: {message}")


# ---------------------------------------------------------------------------
# configuration


def _locate(text: str, section: str, key: str | None = None) -> str:
    """``"line N: "`` for where ``[section] key`` appears in ``text``."""
    current = None
    for i, line in enumerate(text.splitlines(), 1):
        s = line.strip()
        m = re.match(r"\[\s*([^\]]+?)\s*\]", s)
        if m:
            current = m.group(1)
            if key is None and current == section:
                return f"line {i}: "
        elif key is not None and current == section and re.match(rf"{re.escape(key)}\s*=", s):
            return f"line {i}: "
    return ""


def _merge(base: dict, layer: dict) -> dict:
    out = copy.deepcopy(base)
    for sec, vals in layer.items():
        out.setdefault(sec, {}).update(vals)
    return out


def _check_keys(layer: dict, origin: str, text: str = "") -> None:
    for sec, vals in layer.items():
        if sec not in SECTIONS:
            raise ConfigError(f"{origin}: {_locate(text, sec)}unknown section [{sec}]")
        if not isinstance(vals, dict):
            raise ConfigError(f"{origin}: {_locate(text, sec)}[{sec}] must be a table")
        for key in vals:
            if key not in SECTIONS[sec]:
                raise ConfigError(
                    f"{origin}: {_locate(text, sec, key)}unknown key {key!r} in [{sec}] "
                    f"(allowed: {', '.join(sorted(SECTIONS[sec]))})"
                )


def load_toml(path: str) -> dict:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        data = tomli.loads(text)
    except tomli.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    _check_keys(data, path, text)
    return data


def env_layer(environ=None) -> dict:
    environ = os.environ if environ is None else environ
    layer: dict = {}
    for name, raw in environ.items():
        if not name.startswith(ENV_PREFIX) or "__" not in name:
            continue
        sec, _, key = name[len(ENV_PREFIX) :].partition("__")
        sec = sec.lower()
        key = next((k for k in SECTIONS.get(sec, ()) if k.lower() == key.lower()), key.lower())
        try:
            value = tomli.loads(f"v = {raw}")["v"]
        except tomli.TOMLDecodeError:
            value = raw
        layer.setdefault(sec, {})[key] = value
    _check_keys(layer, "environment")
    return layer


def _none_if_empty(d: dict) -> dict:
    # TOML has no null; "none" or "" disables an optional setting
    return {k: (None if isinstance(v, str) and v.lower() in ("", "none") else v) for k, v in d.items()}


def resolve_config(args, environ=None) -> dict:
    cfg: dict = {"experiment": dict(EXPERIMENT_DEFAULTS)}
    if getattr(args, "preset", None):
        if args.preset not in PRESETS:
            raise ConfigError(f"unknown preset {args.preset!r} (choose from {', '.join(PRESETS)})")
        cfg = _merge(cfg, PRESETS[args.preset])
    if getattr(args, "config", None):
        cfg = _merge(cfg, load_toml(args.config))
    cfg = _merge(cfg, env_layer(environ))
    flags = {}
    for name in ("seed", "workers", "mesh"):
        if getattr(args, name, None) is not None:
            flags[name] = getattr(args, name)
    cfg = _merge(cfg, {"experiment": flags})
    for sec in ("experiment", "thresholds"):
        if sec in cfg:
            cfg[sec] = _none_if_empty(cfg[sec])
    return cfg


class Resolved:
    """A fully validated configuration: every object an experiment needs."""

    def __init__(self, cfg: dict):
        self.cfg = cfg
        if "model" not in cfg:
            raise ConfigError("config needs a [model] section (or a --preset)")
        try:
            self.model = TailModel.from_dict(cfg["model"])
            coeffs = dict(cfg.get("coeffs", {}))
            if "values" in coeffs:
                coeffs["values"] = tuple(coeffs["values"])
            self.coeffs = CoefficientSeq(**coeffs)
            validate_coeffs(self.coeffs, self.model.alpha)
            exp = cfg["experiment"]
            self.exp = exp
            if exp["kind"] not in EXPERIMENT_KINDS:
                raise ValueError(f"experiment kind must be one of {EXPERIMENT_KINDS}, got {exp['kind']!r}")
            for key in ("n", "N", "draws", "workers", "sup_grid", "seed"):
                if not isinstance(exp[key], int) or isinstance(exp[key], bool):
                    raise ValueError(f"[experiment] {key} must be an integer, got {exp[key]!r}")
            if exp["workers"] < 1:
                raise ValueError("[experiment] workers must be >= 1")
            if exp["n"] < 2:
                raise ValueError("[experiment] n must be >= 2")
            if not exp["n_list"] or any(int(n) < 1 for n in exp["n_list"]):
                raise ValueError("[experiment] n_list must be a non-empty list of positive integers")
            self.grid = FidiGrid(tuple(exp["grid"]))
            if exp["mesh"] is not None and not float(exp["mesh"]) > 0:
                raise ValueError("[experiment] mesh must be positive")
            self.trunc_K = exp["trunc_K"] or default_trunc_K(self.model.alpha)
            check_trunc_K(self.model.alpha, self.trunc_K)
            if exp["kind"] in ("fidi", "functional") and exp["N"] < 1000:
                raise ValueError(f"[experiment] N must be >= 1000, got {exp['N']}")
            if self.coeffs.mixed and not exp["diagnostic"]:
                raise ValueError("mixed-sign coefficients need [experiment] diagnostic = true")
            self.thresholds = Thresholds.from_dict(cfg.get("thresholds"))
            self.spec = None if self.coeffs.mixed else limit_spec(self.model, self.coeffs)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"invalid config: {exc}") from exc

    def echo(self) -> dict:
        exp = {k: v for k, v in self.exp.items() if k != "workers"}
        return {
            "model": self.model.to_dict(),
            "coeffs": self.coeffs.to_dict(),
            "experiment": exp | {"trunc_K": self.trunc_K},
            "thresholds": {k: getattr(self.thresholds, k) for k in Thresholds.__dataclass_fields__},
        }


# ---------------------------------------------------------------------------
# output


def atomic_write(path: str | Path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _emit(text: str, out: str | None) -> None:
    if out:
        atomic_write(out, text)
    else:
        sys.stdout.write(text)


def _timestamp() -> str:
    return _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")


def _load_path(path: str):
    text = Path(path).read_text()
    if path.endswith(".csv"):
        return cadlag.from_csv(text)
    d = json.loads(text)
    if "path" in d:
        d = d["path"]
    return cadlag.from_json(json.dumps(d))


# ---------------------------------------------------------------------------
# subcommands


def cmd_simulate(args, r: Resolved) -> int:
    n = r.exp["n"]
    jp = joint_path(r.model, r.coeffs, n, r.exp["seed"], r.exp["trunc"])
    body = {
        "config": r.echo(),
        "n": n,
        "a_n": jp.a_n,
        "b_n": jp.b_n,
        "trunc": jp.trunc,
        "truncation_tail": jp.truncation_tail,
        "path": json.loads(cadlag.to_json(jp.path)),
    }
    _emit(json.dumps(body, sort_keys=True) + "\n", args.out)
    return 0


def cmd_limit(args, r: Resolved) -> int:
    if r.spec is None:
        raise ConfigError("no limit exists for mixed-sign coefficients")
    n = r.exp["n"]
    grid = np.arange(1, n + 1) / n
    path = simulate_joint_limit(r.spec, grid, r.trunc_K, r.exp["seed"])
    body = {"config": r.echo(), "limit": r.spec.to_dict(), "path": json.loads(cadlag.to_json(path))}
    _emit(json.dumps(body, sort_keys=True) + "\n", args.out)
    return 0


def cmd_distance(args) -> int:
    if args.metric not in METRICS:
        raise ConfigError(f"unknown metric {args.metric!r} (choose from {', '.join(METRICS)})")
    try:
        a, b = _load_path(args.a), _load_path(args.b)
    except (OSError, ValueError, KeyError) as exc:
        raise ConfigError(f"cannot load path: {exc}") from exc
    bivariate = args.metric in ("p", "pm2")
    for name, x in ((args.a, a), (args.b, b)):
        if isinstance(x, cadlag.BivariatePath) != bivariate:
            kind = "bivariate" if bivariate else "univariate"
            raise ConfigError(f"metric {args.metric!r} needs {kind} paths; {name} is not")
    res = METRICS[args.metric](a, b, args.mesh)
    _emit(json.dumps({"metric": args.metric} | res.to_dict(), sort_keys=True) + "\n", args.out)
    return 0


def run_experiment(r: Resolved) -> ExperimentReport:
    exp = r.exp
    echo = r.echo()
    if exp["kind"] == "fidi":
        rep = fidi_experiment(
            r.model, r.coeffs, exp["n_list"], r.grid, exp["N"], exp["seed"],
            trunc_K=r.trunc_K, trunc=exp["trunc"], z_grid=exp["z_grid"], thresholds=r.thresholds,
            diagnostic=exp["diagnostic"], workers=exp["workers"], config=echo,
        )
    elif exp["kind"] == "functional":
        th = r.thresholds if "thresholds" in r.cfg else None
        rep = functional_convergence_experiment(
            r.model, r.coeffs, exp["n_list"], exp["N"], exp["seed"],
            trunc_K=r.trunc_K, trunc=exp["trunc"], sup_grid=exp["sup_grid"], thresholds=th,
            diagnostic=exp["diagnostic"], workers=exp["workers"], config=echo,
        )
    else:
        rep = self_distance_experiment(r.model, r.coeffs, exp["n"], exp["draws"], exp["seed"], exp["mesh"], config=echo)
    rep.header |= {"timestamp": _timestamp(), "workers": exp["workers"]}
    return rep


def cmd_converge(args, r: Resolved) -> int:
    json_out = args.out or r.cfg.get("output", {}).get("json")
    csv_out = r.cfg.get("output", {}).get("csv")
    if json_out and not csv_out:
        csv_out = str(Path(json_out).with_suffix(".csv"))
    rep = run_experiment(r)
    _emit(rep.to_json(), json_out)
    if csv_out:
        atomic_write(csv_out, rep.to_csv())
    for a in rep.body["assertions"]:
        print(f"{'PASS' if a['passed'] else 'FAIL'} {a['name']}: {a['value']:.4g} {a['relation']} {a['threshold']:.4g}", file=sys.stderr)
    return 0 if rep.passed else 2


def cmd_report(args) -> int:
    try:
        rep = ExperimentReport.from_json(Path(args.report).read_text())
    except (OSError, ValueError, KeyError) as exc:
        raise ConfigError(f"cannot read report {args.report}: {exc}") from exc
    _emit(rep.to_csv(), args.out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="m1lab", description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, experiment=True):
        sp.add_argument("--out", help="output file (default: stdout)")
        if experiment:
            sp.add_argument("--config", help="TOML config file")
            sp.add_argument("--preset", help=f"built-in config: {', '.join(PRESETS)}")
            sp.add_argument("--seed", type=int)
            sp.add_argument("--workers", type=int)
            sp.add_argument("--mesh", type=float)

    common(sub.add_parser("simulate", help="simulate one joint path (V_n, W_n)"))
    common(sub.add_parser("limit", help="simulate one path of the limit pair on a uniform grid"))
    common(sub.add_parser("converge", help="run the configured convergence experiment"))
    d = sub.add_parser("distance", help="distance between two path files")
    common(d, experiment=False)
    d.add_argument("--metric", default="m1", help=f"one of {', '.join(METRICS)}")
    d.add_argument("--mesh", type=float)
    d.add_argument("a")
    d.add_argument("b")
    rp = sub.add_parser("report", help="flatten a report JSON to CSV")
    common(rp, experiment=False)
    rp.add_argument("report")
    return p


def run(argv=None, environ=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        if args.command == "distance":
            return cmd_distance(args)
        if args.command == "report":
            return cmd_report(args)
        r = Resolved(resolve_config(args, environ))
        return {"simulate": cmd_simulate, "limit": cmd_limit, "converge": cmd_converge}[args.command](args, r)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()

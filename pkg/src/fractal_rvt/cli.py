"""Command-line runner: ``fractal-rvt run <experiment> [--key value ...] [--config path] [--out dir]``.

Config files are flat ``key = value`` text (``#`` comments allowed); flags
override config keys. Lists are comma separated; numbers may be written
``2^-6``, and ``2^-6..2^-2`` expands to every power of two in between.

Exit codes: 0 all checks passed, 2 a check failed, 1 usage or config error.
"""
import argparse
import configparser
import csv
import json
import math
import os
import sys

from . import __version__
from .exceptions import SizeCapError
from .experiments import BOOL_KEYS, EXPERIMENTS, INT_KEYS, LIST_KEYS, STRING_KEYS, run_experiment

SCHEMA_VERSION = 1


class ConfigError(ValueError):
    pass


def _number(tok, integer=False):
    tok = tok.strip()
    if "^" in tok:
        base, exp = tok.split("^", 1)
        val = float(base) ** float(exp)
    else:
        val = float(tok)
    if integer:
        if val != int(val):
            raise ConfigError(f"expected an integer, got {tok!r}")
        return int(val)
    return val


def _expand(tok, integer):
    if ".." in tok:
        a, b = (_number(x) for x in tok.split("..", 1))
        lo, hi = sorted((math.log2(a), math.log2(b)))
        if lo != int(lo) or hi != int(hi):
            raise ConfigError(f"range endpoints must be powers of two: {tok!r}")
        vals = [2.0 ** k for k in range(int(lo), int(hi) + 1)]
        return [int(v) for v in vals] if integer else vals
    return [_number(tok, integer)]


def parse_value(key, raw):
    """Typed value for ``key`` from its text form."""
    raw = str(raw).strip()
    if raw == "":
        raise ConfigError(f"empty value for {key!r}")
    try:
        if key in BOOL_KEYS:
            if raw.lower() not in ("true", "false", "1", "0", "yes", "no"):
                raise ConfigError(f"{key} must be true or false")
            return raw.lower() in ("true", "1", "yes")
        if key in STRING_KEYS:
            vals = [v.strip() for v in raw.split(",") if v.strip()]
            return vals if key in LIST_KEYS else vals[0]
        integer = key in INT_KEYS or key in ("n", "q")
        vals = [v for tok in raw.split(",") if tok.strip() for v in _expand(tok, integer)]
        if key in LIST_KEYS:
            return vals
        if len(vals) != 1:
            raise ConfigError(f"{key} takes a single value")
        return vals[0]
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"cannot parse {key} = {raw!r}") from exc


def read_config(path):
    """Flat ``key = value`` pairs from ``path``."""
    if not os.path.exists(path):
        raise ConfigError(f"config file not found: {path}")
    with open(path, encoding="utf-8") as f:
        text = f.read()
    cp = configparser.ConfigParser(comment_prefixes=("#", ";"), inline_comment_prefixes=("#",),
                                   delimiters=("=",), interpolation=None)
    try:
        cp.read_string("[run]\n" + text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from exc
    return {k.replace("-", "_"): v for k, v in cp["run"].items()}


def _fmt(x):
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, int):
        return str(x)
    if isinstance(x, float):
        if math.isnan(x):
            return "nan"
        return f"{x:.12g}"
    return str(x)


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if hasattr(x, "item") and callable(x.item):
        x = x.item()
    if isinstance(x, complex):
        return [x.real, x.imag]
    if isinstance(x, float) and not math.isfinite(x):
        return str(x)
    return x


def emit_report(result, out_dir):
    """Write one CSV per table plus ``<experiment>.json``; returns the written paths."""
    os.makedirs(out_dir, exist_ok=True)
    paths = []
    for name in sorted(result.tables):
        header, rows = result.tables[name]
        path = os.path.join(out_dir, f"{result.name}_{name}.csv")
        with open(path, "w", newline="", encoding="utf-8") as f:
            w = csv.writer(f, lineterminator="\n")
            w.writerow(header)
            for r in rows:
                w.writerow([_fmt(v) for v in r])
        paths.append(path)
    verdict = {
        "experiment": result.name,
        "schema_version": SCHEMA_VERSION,
        "version": __version__,
        "params": result.params,
        "checks": [c.as_dict() for c in result.checks],
        "summary": result.summary,
        "passed": result.passed,
    }
    path = os.path.join(out_dir, f"{result.name}.json")
    with open(path, "w", encoding="utf-8") as f:
        json.dump(_jsonable(verdict), f, sort_keys=True, indent=2)
        f.write("\n")
    paths.append(path)
    return paths


def _overrides(tokens):
    out = {}
    i = 0
    while i < len(tokens):
        tok = tokens[i]
        if not tok.startswith("--"):
            raise ConfigError(f"unexpected argument {tok!r}")
        key = tok[2:]
        if "=" in key:
            key, val = key.split("=", 1)
            i += 1
        else:
            if i + 1 >= len(tokens) or tokens[i + 1].startswith("--"):
                raise ConfigError(f"flag {tok} needs a value")
            val = tokens[i + 1]
            i += 2
        out[key.replace("-", "_")] = val
    return out


def run(experiment, config_path=None, out_dir="results", overrides=None):
    """Run one experiment; returns the process exit code."""
    if experiment not in EXPERIMENTS:
        print(f"error: unknown experiment {experiment!r}; choose from {', '.join(sorted(EXPERIMENTS))}",
              file=sys.stderr)
        return 1
    try:
        raw = read_config(config_path) if config_path else {}
        raw.update(overrides or {})
        params = {k: parse_value(k, v) for k, v in sorted(raw.items())}
        result = run_experiment(experiment, params)
    except (ConfigError, KeyError) as exc:
        print(f"error: {exc.args[0] if exc.args else exc}", file=sys.stderr)
        return 1
    except SizeCapError as exc:
        print(f"error: resource cap exceeded: {exc}", file=sys.stderr)
        return 1
    except (TypeError, ValueError) as exc:
        print(f"error: invalid parameters: {exc}", file=sys.stderr)
        return 1
    emit_report(result, out_dir)
    for c in result.checks:
        print(f"{'PASS' if c.passed else 'FAIL'}  {c.criterion}: observed {_fmt_obs(c.observed)}, target {c.target}")
    return 0 if result.passed else 2


def _fmt_obs(x):
    if isinstance(x, (list, tuple)):
        return "[" + ", ".join(_fmt(float(v)) for v in x) + "]"
    return _fmt(float(x)) if isinstance(x, (int, float)) else str(x)


def main(argv=None):
    parser = argparse.ArgumentParser(prog="fractal-rvt", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command")
    rp = sub.add_parser("run", help="run a named experiment")
    rp.add_argument("experiment")
    rp.add_argument("--config", default=None)
    rp.add_argument("--out", default="results")
    sub.add_parser("list", help="list experiments and their required keys")
    args, rest = parser.parse_known_args(argv)
    if args.command == "list":
        for name in sorted(EXPERIMENTS):
            _, req, opt = EXPERIMENTS[name]
            print(f"{name}: required {', '.join(req)}; optional {', '.join(sorted(opt))}")
        return 0
    if args.command != "run":
        parser.print_usage(sys.stderr)
        return 1
    try:
        ov = _overrides(rest)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return run(args.experiment, args.config, args.out, ov)


if __name__ == "__main__":
    sys.exit(main())

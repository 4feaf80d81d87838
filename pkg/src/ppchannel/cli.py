"""Command line front end.

Every data command reads a JSON config, writes a CSV table and a JSON
sidecar next to it. Timestamps and timings only go to the sidecar, so
repeated runs give byte-identical CSV files. Outputs are written to a
temporary file and renamed, so a failed run leaves nothing behind.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
import tempfile
import time
from datetime import datetime, timezone

import jsonschema
import numpy as np

from . import __version__, exact, exponents, montecarlo, noise, pointprocess, validation
from .decoding import decoder_from_config
from .errors import ModelError, ParameterError, ScenarioError, UnsupportedOperation

SCHEMA_VERSION = 1

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_NUMERIC, EXIT_FLAGGED = 0, 1, 2, 3, 4

_NOISE = {
    "type": "object",
    "required": ["kind"],
    "properties": {
        "kind": {"enum": ["wgn", "symexp", "uniform", "cgn-ar1", "markov-ar1"]},
        "sigma": {"type": "number", "exclusiveMinimum": 0},
        "a": {"type": "number", "exclusiveMinimum": -1, "exclusiveMaximum": 1},
        "sigma_eps": {"type": "number", "exclusiveMinimum": 0},
        "max_dim": {"type": "integer", "minimum": 1},
    },
    "additionalProperties": False,
}

CONFIG_SCHEMA = {
    "type": "object",
    "properties": {
        "noise": _NOISE,
        "codebook": {
            "type": "object",
            "properties": {
                "codebook": {"enum": list(pointprocess.CODEBOOKS)},
                "alpha": {"type": "number", "exclusiveMinimum": 0},
                "epsilon": {"type": "number", "minimum": 0},
                "window_scale": {"type": "number", "exclusiveMinimum": 0},
            },
            "additionalProperties": False,
        },
        "decoder": {
            "type": "object",
            "properties": {
                "decoder": {"enum": ["mle", "typicality", "mismatched"]},
                "delta": {"type": "number", "exclusiveMinimum": 0},
                "design": _NOISE,
            },
            "additionalProperties": False,
        },
        "sweep": {
            "type": "object",
            "properties": {
                "n_list": {"type": "array", "minItems": 1,
                           "items": {"type": "integer", "minimum": 1}},
                "alpha_list": {"type": "array", "minItems": 1,
                               "items": {"type": "number", "exclusiveMinimum": 0}},
                "P_list": {"type": "array", "minItems": 1,
                           "items": {"type": "number", "exclusiveMinimum": 0}},
                "n": {"type": "integer", "minimum": 1},
                "alpha": {"type": "number", "exclusiveMinimum": 0},
                "P_or_A": {"type": "number", "exclusiveMinimum": 0},
                "form": {"enum": ["awgn", "power"]},
            },
            "additionalProperties": False,
        },
        "mc": {
            "type": "object",
            "properties": {
                "trials": {"type": "integer", "minimum": 1},
                "seed": {"type": "integer", "minimum": 0, "maximum": 2 ** 64 - 1},
                "mode": {"enum": ["explicit", "reduced", "mass-transport"]},
                "batch_size": {"type": "integer", "minimum": 1},
            },
            "additionalProperties": False,
        },
        "output": {
            "type": "object",
            "properties": {"path": {"type": "string"}, "format": {"enum": ["csv"]}},
            "additionalProperties": False,
        },
    },
    "additionalProperties": False,
}

COLUMNS = {
    "exponent": ["alpha", "exponent", "minimizer", "branch", "method", "model"],
    "pe-exact": ["n", "alpha", "log_pe", "minus_log_pe_over_n", "method"],
    "pe-mc": ["n", "alpha", "mean", "se", "ci_lo", "ci_hi", "trials", "edge_events", "mode"],
    "capacity": ["P", "entropy_rate", "capacity_lower", "capacity_upper", "gap"],
    "shannon-map": ["rate", "exponent_lower_bound", "alpha", "P_or_A"],
}


class ConfigError(Exception):
    """Invalid config; ``pointer`` is a JSON pointer to the offending value."""

    def __init__(self, pointer, message):
        super().__init__(f"{pointer or '/'}: {message}")
        self.pointer = pointer


class RowError(Exception):
    pass


class FlaggedEstimate(Exception):
    pass


def _pointer(path):
    return "".join(f"/{p}" for p in path)


def validate_config(cfg, command):
    """Schema and cross-field checks. Raises :class:`ConfigError`."""
    errors = sorted(jsonschema.Draft202012Validator(CONFIG_SCHEMA).iter_errors(cfg),
                    key=lambda e: list(e.absolute_path))
    if errors:
        err = errors[0]
        raise ConfigError(_pointer(err.absolute_path), err.message)
    if command == "validate":
        return
    if "noise" not in cfg:
        raise ConfigError("/noise", "required for this command")
    sweep = cfg.get("sweep", {})
    axes = [k for k in ("n_list", "alpha_list", "P_list") if k in sweep]
    allowed = {"exponent": ["alpha_list"], "pe-exact": ["n_list", "alpha_list"],
               "pe-mc": ["n_list", "alpha_list"], "capacity": ["P_list"],
               "shannon-map": ["alpha_list"]}[command]
    if len(axes) != 1:
        raise ConfigError("/sweep", f"exactly one sweep axis among {allowed} is required")
    if axes[0] not in allowed:
        raise ConfigError(f"/sweep/{axes[0]}", f"not a sweep axis for {command}")
    if command in ("exponent", "shannon-map"):
        for i, a in enumerate(sweep["alpha_list"]):
            if a < 1:
                raise ConfigError(f"/sweep/alpha_list/{i}", "alpha must be at least 1")
    if command in ("pe-exact", "pe-mc"):
        if axes[0] == "n_list" and "alpha" not in sweep and "alpha" not in cfg.get("codebook", {}):
            raise ConfigError("/sweep/alpha", "a fixed alpha is needed with n_list")
        if axes[0] == "alpha_list" and "n" not in sweep:
            raise ConfigError("/sweep/n", "a fixed n is needed with alpha_list")
        eps = cfg.get("codebook", {}).get("epsilon", 0.0)
        alphas = sweep.get("alpha_list") or [sweep.get("alpha", cfg.get("codebook", {}).get("alpha"))]
        if any(eps >= a for a in alphas):
            raise ConfigError("/codebook/epsilon", "epsilon must be smaller than alpha")
    if command == "shannon-map" and "P_or_A" not in sweep:
        raise ConfigError("/sweep/P_or_A", "required for shannon-map")
    if command == "pe-mc" and cfg.get("decoder", {}).get("decoder") == "mismatched" \
            and "design" not in cfg.get("decoder", {}):
        raise ConfigError("/decoder/design", "mismatched decoding needs a design model")
    try:
        model = noise.from_config(cfg["noise"])
    except ModelError as exc:
        raise ConfigError("/noise", str(exc)) from None
    if command == "pe-exact" and axes[0] == "n_list" and isinstance(model, noise.ColoredGaussian):
        for i, n in enumerate(sweep["n_list"]):
            if n > model.max_dim:
                raise ConfigError(f"/sweep/n_list/{i}", f"exceeds noise max_dim={model.max_dim}")


def _grid(cfg):
    """``(n, alpha)`` pairs of a sweep."""
    sweep = cfg["sweep"]
    if "n_list" in sweep:
        alpha = sweep.get("alpha", cfg.get("codebook", {}).get("alpha"))
        return [(int(n), float(alpha)) for n in sweep["n_list"]]
    return [(int(sweep["n"]), float(a)) for a in sweep["alpha_list"]]


def _num(x):
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


# --- row producers ------------------------------------------------------------------

def rows_exponent(cfg, args):
    model = noise.from_config(cfg["noise"])
    codebook = cfg.get("codebook", {}).get("codebook", "poisson")
    fn = exponents.poisson_exponent if codebook == "poisson" else exponents.matern_exponent
    if codebook == "grid":
        raise ConfigError("/codebook/codebook", "no exponent routine for the grid codebook")
    for a in cfg["sweep"]["alpha_list"]:
        yield {"alpha": float(a)}, lambda a=a: _exp_row(fn(model, float(a)), model)


def _exp_row(r, model):
    return [r.alpha, r.exponent, r.minimizer, r.branch, r.method, model.kind]


def _exact_method(cfg):
    codebook = cfg.get("codebook", {}).get("codebook", "poisson")
    rule = cfg.get("decoder", {}).get("decoder", "mle")
    if rule == "typicality":
        if codebook != "poisson":
            raise ConfigError("/decoder/decoder", "typicality bound is for the Poisson codebook")
        return "typicality-bound"
    if rule != "mle":
        raise ConfigError("/decoder/decoder", "pe-exact supports mle and typicality")
    return {"poisson": "poisson-mle-quadrature", "matern1": "matern-bound-quadrature",
            "matern-stun": "matern-bound-quadrature", "grid": "grid-closed-form"}[codebook]


def rows_pe_exact(cfg, args):
    model = noise.from_config(cfg["noise"])
    method = _exact_method(cfg)
    eps = float(cfg.get("codebook", {}).get("epsilon", 0.0))
    delta = float(cfg.get("decoder", {}).get("delta", 0.1))

    def one(n, a):
        if method == "poisson-mle-quadrature":
            lp = exact.poisson_mle_log_pe(model, n, a).log_pe
        elif method == "matern-bound-quadrature":
            lp = exact.matern_mle_log_pe_bound(model, n, a, eps).log_pe
        elif method == "typicality-bound":
            lp = exact.typicality_log_pe_bound(model, n, -model.entropy_rate() - np.log(a), delta).log_pe
        else:
            if not isinstance(model, noise.WhiteGaussian):
                raise UnsupportedOperation("grid closed form needs wgn noise")
            lps = exact.grid_log_ps(n, -model.entropy_rate() - np.log(a), model.sigma)
            lp = float(np.log(-np.expm1(lps))) if lps < 0 else -np.inf
        return [n, a, lp, -lp / n, method]

    for n, a in _grid(cfg):
        yield {"n": n, "alpha": a}, lambda n=n, a=a: one(n, a)


def rows_pe_mc(cfg, args):
    model = noise.from_config(cfg["noise"])
    cb = cfg.get("codebook", {})
    mc = cfg.get("mc", {})
    decoder = decoder_from_config(cfg.get("decoder", {}))
    mode = mc.get("mode", "explicit")
    trials = int(mc.get("trials", 10_000))
    seed = int(args.seed if args.seed is not None else mc.get("seed", 0))
    batch = int(mc.get("batch_size", montecarlo.DEFAULT_BATCH))

    def one(n, a):
        sc = pointprocess.palm_scenario_for(cb.get("codebook", "poisson"), model, n, a,
                                            float(cb.get("epsilon", 0.0)),
                                            float(cb.get("window_scale", 1.0)))
        if mode == "mass-transport":
            est = montecarlo.estimate_pe_mass_transport(sc, model, n, trials, seed, batch, args.threads)
        else:
            est = montecarlo.estimate_pe(sc, decoder, model, n, trials, seed, mode, batch, args.threads)
        if est.flagged:
            raise FlaggedEstimate(f"{est.edge_events} of {trials} trials were edge events "
                                  f"at n={n}, alpha={a}; enlarge codebook.window_scale")
        return [n, a, est.mean, est.std_error, est.ci95[0], est.ci95[1], est.trials,
                est.edge_events, mode]

    for n, a in _grid(cfg):
        yield {"n": n, "alpha": a}, lambda n=n, a=a: one(n, a)


def rows_capacity(cfg, args):
    model = noise.from_config(cfg["noise"])
    h = model.entropy_rate()
    for p in cfg["sweep"]["P_list"]:
        def one(p=float(p)):
            lo, hi = exponents.shannon_capacity_bounds(model, p)
            return [p, h, lo, hi, hi - lo]
        yield {"P": float(p)}, one


def rows_shannon(cfg, args):
    model = noise.from_config(cfg["noise"])
    sweep = cfg["sweep"]
    codebook = cfg.get("codebook", {}).get("codebook", "poisson")
    codebook = "matern" if codebook.startswith("matern") else codebook
    curve = exponents.shannon_exponent_curve(model, float(sweep["P_or_A"]), sweep["alpha_list"],
                                             codebook=codebook, form=sweep.get("form"))
    for r in curve.rows:
        yield {"alpha": r.alpha}, lambda r=r: [r.rate, r.exponent_lower_bound, r.alpha, r.p_or_a]


PRODUCERS = {"exponent": rows_exponent, "pe-exact": rows_pe_exact, "pe-mc": rows_pe_mc,
             "capacity": rows_capacity, "shannon-map": rows_shannon}


# --- output ----------------------------------------------------------------------------

def _atomic_write(path, text):
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def run_command(command, cfg, args):
    """Produce all rows; returns ``(csv_text, sidecar_dict)``."""
    rows, timings = [], []
    for i, (key, make) in enumerate(PRODUCERS[command](cfg, args)):
        t0 = time.perf_counter()
        try:
            row = make()
        except (FlaggedEstimate, ConfigError):
            raise
        except (ArithmeticError, ValueError, UnsupportedOperation, FloatingPointError) as exc:
            raise RowError(f"row {i} {key} failed: {exc}") from exc
        timings.append({"row": i, **key, "wall_clock_s": time.perf_counter() - t0})
        rows.append(row)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(COLUMNS[command])
    for row in rows:
        writer.writerow([_num(x) for x in row])
    sidecar = {
        "schema_version": SCHEMA_VERSION,
        "library_version": __version__,
        "command": command,
        "config": cfg,
        "seed": args.seed,
        "threads": args.threads,
        "created_utc": datetime.now(timezone.utc).isoformat(),
        "rows": timings,
    }
    return buf.getvalue(), sidecar


def _load_config(path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError("", f"invalid JSON: {exc}") from None
    except OSError as exc:
        raise ConfigError("", f"cannot read config: {exc}") from None


def _data_command(args):
    cfg = _load_config(args.config) if args.config else {}
    validate_config(cfg, args.command)
    out = args.out or cfg.get("output", {}).get("path")
    text, sidecar = run_command(args.command, cfg, args)
    if out:
        sidecar["output"] = os.path.basename(out)
        _atomic_write(out, text)
        _atomic_write(out + ".json", json.dumps(sidecar, indent=2, sort_keys=True) + "\n")
    else:
        sys.stdout.write(text)
    return EXIT_OK


def _validate_command(args):
    if args.config:
        validate_config(_load_config(args.config), "validate")
    t0 = time.perf_counter()
    results = validation.run_tier(args.tier, report=lambda r: print(validation.format_row(r), flush=True))
    total = time.perf_counter() - t0
    failed = [r for r in results if not r.passed]
    budget = 60.0 if args.tier == "fast" else 600.0
    print(f"{len(results) - len(failed)}/{len(results)} passed in {total:.1f}s "
          f"(budget {budget:.0f}s, tier {args.tier})")
    if total > budget:
        print("FAIL  runtime budget exceeded")
        return EXIT_FAIL
    return EXIT_OK if not failed else EXIT_FAIL


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON config file")
    common.add_argument("--out", help="CSV output path; a .json sidecar is written next to it")
    common.add_argument("--seed", type=int, default=None, help="overrides mc.seed")
    common.add_argument("--threads", type=int, default=1,
                        help="worker threads for Monte Carlo; 0 uses every core")
    common.add_argument("--tier", choices=["fast", "full"], default="fast",
                        help="check tier for the validate command")
    parser = argparse.ArgumentParser(prog="ppchannel",
                                     description="Error probabilities of random codes in R^n")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_ in (("exponent", "error exponent versus alpha"),
                        ("pe-exact", "error probability by quadrature"),
                        ("pe-mc", "error probability by Monte Carlo"),
                        ("capacity", "capacity bounds under a power constraint"),
                        ("shannon-map", "exponent lower bound versus Shannon rate"),
                        ("validate", "run the acceptance and invariant checks")):
        sub.add_parser(name, parents=[common], help=help_)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    if args.threads == 0:
        args.threads = os.cpu_count() or 1
    if args.threads < 0:
        print("error: --threads must be nonnegative", file=sys.stderr)
        return EXIT_CONFIG
    try:
        if args.command == "validate":
            return _validate_command(args)
        return _data_command(args)
    except ConfigError as exc:
        print(f"config error at {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except FlaggedEstimate as exc:
        print(f"estimate rejected: {exc}", file=sys.stderr)
        return EXIT_FLAGGED
    except (RowError, ParameterError, ScenarioError, UnsupportedOperation) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())

"""Command-line front end: figure sweeps and derived constants as CSV.

Usage: kerrgate COMMAND [options]   (or python -m kerrgate)

Parameters come from command defaults, then an optional ``--config``
file of ``key = value`` lines (``#`` starts a comment), then flags.
Exit codes: 0 success, 1 bad arguments or domain error, 2 I/O error.
"""

from __future__ import annotations

import argparse
import csv
import io
import math
import sys
import warnings
from typing import Any, Callable, Iterable, Sequence

import numpy as np

from .errors import KerrGateError
from .gate_dispersion import fidelity_dispersion_matched, physical_length
from .gate_fast import FastKerrParams, fidelity_fast, fidelity_slow, output_state_fast, theta
from .jsa import schmidt
from .numerics import derive_gamma, half_max_root
from .oracles import PhysicalDefaults, commutator_norm_ratio, dyson_taylor_second_order

COMMANDS = ("fig2", "fig3", "fig4", "entangle", "gamma", "length", "commutator", "dyson", "slow")

# key -> (type, help)
PARAMS: dict[str, tuple[Callable[[str], Any], str]] = {
    "sigma": (float, "photon bandwidth sigma [rad/s]"),
    "M": (float, "response bandwidth M [rad/s]; ignored when eta is given"),
    "eta": (float, "sigma / M"),
    "x_min": (float, "first X of the sweep"),
    "x_max": (float, "last X of the sweep"),
    "steps": (int, "number of sweep points, endpoints included"),
    "script_l": (float, "dimensionless dispersion length for `length`"),
    "script_l_min": (float, "first script_L of the fig4 sweep"),
    "script_l_max": (float, "last script_L of the fig4 sweep"),
    "dk": (float, "|k'_p - k'_s| [s/m]"),
    "n_c": (int, "series cutoff for `slow`"),
    "grid_points": (int, "points per axis of the commutator grid"),
    "extent": (float, "commutator grid half-width in units of sigma"),
    "samples": (int, "Monte Carlo samples for `dyson`"),
    "seed": (int, "random seed for `dyson`"),
    "output_path": (str, "CSV destination (default: stdout)"),
    "gamma": (str, "'auto' or a literal value"),
}

NONNEGATIVE = {"x_min", "seed"}

DEFAULTS: dict[str, Any] = {
    "sigma": 1e13,
    "eta": None,
    "M": None,
    "x_min": 0.0,
    "x_max": 100.0,
    "steps": 201,
    "script_l": 100.0,
    "script_l_min": 1.0,
    "script_l_max": 200.0,
    "dk": 1e-8,
    "n_c": 200,
    "grid_points": 48,
    "extent": 6.0,
    "samples": 100_000,
    "seed": 0,
    "output_path": None,
    "gamma": "auto",
}

COMMAND_DEFAULTS: dict[str, dict[str, Any]] = {
    "fig2": {"eta": 0.01},
    "fig3": {"eta": 0.01},
    "fig4": {"steps": 200},
    "slow": {"x_max": 2 * math.pi},
    "entangle": {"eta": 0.01, "x_max": math.pi, "steps": 3},
    "commutator": {"M": 1e17},
    "dyson": {"sigma": 1e9, "M": 1e10},
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # exit 1 instead of argparse's 2
        self.print_usage(sys.stderr)
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="kerrgate", description="Cross-Kerr gate simulations as CSV data.")
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("--config", help="file of `key = value` lines")
    for key, (typ, text) in PARAMS.items():
        flag = "--" + key.replace("_", "-")
        ap.add_argument(flag, dest=key, type=str, default=None, help=text)
    return ap


def read_config(path: str) -> dict[str, str]:
    out: dict[str, str] = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise UsageError(f"{path}:{lineno}: expected `key = value`")
            key, value = (s.strip() for s in line.split("=", 1))
            key = key.replace("-", "_")
            if key not in PARAMS:
                raise UsageError(f"{path}:{lineno}: unknown key {key!r}")
            out[key] = value
    return out


def _convert(key: str, raw: Any) -> Any:
    if raw is None:
        return None
    typ = PARAMS[key][0]
    if key == "gamma":
        if raw == "auto":
            return raw
        typ = float
    try:
        v = typ(raw)
    except ValueError:
        raise UsageError(f"{key}: cannot parse {raw!r}") from None
    if typ in (int, float):
        if not math.isfinite(v):
            raise UsageError(f"{key} must be finite")
        if key in NONNEGATIVE:
            if v < 0:
                raise UsageError(f"{key} must be non-negative, got {v}")
        elif not v > 0:
            raise UsageError(f"{key} must be positive, got {v}")
    return v


def resolve(args: argparse.Namespace) -> dict[str, Any]:
    """Merge command defaults, config file and flags, in that order."""
    cfg = {**DEFAULTS, **COMMAND_DEFAULTS.get(args.command, {})}
    if args.config:
        for k, v in read_config(args.config).items():
            cfg[k] = _convert(k, v)
    for k in PARAMS:
        v = getattr(args, k)
        if v is not None:
            cfg[k] = _convert(k, v)
    if not 2 <= cfg["steps"] <= 1_000_000:
        raise UsageError(f"steps must lie in [2, 10^6], got {cfg['steps']}")
    cfg["gamma"] = derive_gamma() if cfg["gamma"] == "auto" else cfg["gamma"]
    cfg["command"] = args.command
    return cfg


def _eta(cfg: dict[str, Any]) -> float:
    if cfg["eta"] is not None:
        return cfg["eta"]
    if cfg["M"] is not None:
        return cfg["sigma"] / cfg["M"]
    raise UsageError("need --eta or --M")


def _sweep(lo: float, hi: float, steps: int) -> np.ndarray:
    if hi < lo:
        raise UsageError(f"empty sweep: {lo} > {hi}")
    return np.linspace(lo, hi, steps)


def _fast(cfg: dict[str, Any], X: float) -> FastKerrParams:
    return FastKerrParams.from_eta(float(X), _eta(cfg), sigma=cfg["sigma"])


def cmd_fig2(cfg):
    xs = _sweep(cfg["x_min"], cfg["x_max"], cfg["steps"])
    return ["x", "fidelity"], ((x, fidelity_fast(_fast(cfg, x))) for x in xs)


def cmd_fig3(cfg):
    xs = _sweep(cfg["x_min"], cfg["x_max"], cfg["steps"])
    return ["x", "theta"], ((x, theta(_fast(cfg, x))) for x in xs)


def cmd_fig4(cfg):
    ls = _sweep(cfg["script_l_min"], cfg["script_l_max"], cfg["steps"])
    return ["script_l", "fidelity"], ((l, fidelity_dispersion_matched(l, cfg["gamma"])) for l in ls)


def cmd_slow(cfg):
    xs = _sweep(cfg["x_min"], cfg["x_max"], cfg["steps"])
    return ["x", "fidelity"], ((x, fidelity_slow(x, cfg["n_c"])) for x in xs)


def cmd_entangle(cfg):
    xs = _sweep(cfg["x_min"], cfg["x_max"], cfg["steps"])

    def rows():
        for x in xs:
            s = schmidt(output_state_fast(_fast(cfg, x)))
            yield x, s.purity, s.entropy

    return ["x", "purity", "entropy"], rows()


def cmd_gamma(cfg):
    return ["gamma", "x_half"], [(derive_gamma(), half_max_root())]


def cmd_length(cfg):
    L = physical_length(cfg["script_l"], cfg["sigma"], cfg["gamma"], cfg["dk"])
    return ["script_l", "sigma", "dk", "gamma", "length_m"], [
        (cfg["script_l"], cfg["sigma"], cfg["dk"], cfg["gamma"], L)
    ]


def cmd_commutator(cfg):
    d = PhysicalDefaults(
        sigma=cfg["sigma"], M=cfg["M"], dk=cfg["dk"], script_l=cfg["script_l"],
        extent=cfg["extent"], points=cfg["grid_points"],
    )
    basis = d.basis()
    dt = 1.0 / (4 * d.sigma)
    label = f"{d.points}x{d.points}"

    def rows():
        for kind in ("gaussian_filter", "dispersion", "combined"):
            yield kind, label, commutator_norm_ratio(d.kernel(kind), 0.0, dt, basis)

    return ["kind", "grid", "ratio"], rows()


def cmd_dyson(cfg):
    M = cfg["M"] if cfg["eta"] is None else cfg["sigma"] / cfg["eta"]
    r = dyson_taylor_second_order(cfg["sigma"], M, samples=cfg["samples"], seed=cfg["seed"])
    return ["value", "std_error", "samples", "seed"], [(r.value, r.std_error, r.samples, r.seed)]


HANDLERS = {
    "fig2": cmd_fig2, "fig3": cmd_fig3, "fig4": cmd_fig4, "slow": cmd_slow,
    "entangle": cmd_entangle, "gamma": cmd_gamma, "length": cmd_length,
    "commutator": cmd_commutator, "dyson": cmd_dyson,
}


def _fmt(v: Any) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(v).lower()
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        if not math.isfinite(v):
            raise KerrGateError(f"non-finite value in output: {v}")
        return "%.11e" % float(v)
    return str(v)


def render(header: Sequence[str], rows: Iterable[Sequence[Any]]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def run(argv: Sequence[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        cfg = resolve(args)
        header, rows = HANDLERS[cfg["command"]](cfg)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            text = render(header, rows)
    except UsageError as e:
        print(f"kerrgate: {e}", file=sys.stderr)
        return 1
    except KerrGateError as e:
        print(f"kerrgate: {type(e).__name__}: {e}", file=sys.stderr)
        return 1
    except OSError as e:  # config file unreadable
        print(f"kerrgate: {e}", file=sys.stderr)
        return 2

    out = cfg["output_path"]
    if out is None:
        sys.stdout.write(text)
        return 0
    try:
        with open(out, "w", newline="") as fh:
            fh.write(text)
    except OSError as e:
        print(f"kerrgate: cannot write {out}: {e}", file=sys.stderr)
        return 2
    return 0


def main() -> None:
    sys.exit(run())

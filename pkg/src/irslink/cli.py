"""Command-line sweeps over SNR: method selection, presets, CSV emission.

The CLI is a thin orchestrator: every number it prints comes from a library
call with the same parameters.  Four presets (fig2..fig5) reproduce the
reference evaluation layout: alpha = beta = 1, M = 200, eps = 1e-8 for rate
sweeps, D = 100 bits for error sweeps, 10000 Monte-Carlo trials.

CSV contract: header  metric,mode,method,n,snr_db,value,stderr,note  with
one row per sweep point, 17-significant-digit decimals, empty value plus a
reason note for points whose evaluation failed.  Exit codes: 0 full
success, 1 invalid invocation, 2 at least one per-point failure.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import dataclass, field

import numpy as np

from . import metrics_csi, metrics_nocsi, montecarlo
from .channel import SystemParams
from .montecarlo import McConfig
from .numerics import NonConvergenceError, ToleranceError

__all__ = [
    "SweepSpec",
    "MetricCurve",
    "PRESETS",
    "run_sweep",
    "emit_csv",
    "parse_config",
    "main",
]

VALID_METHODS = {
    ("adr", "nocsi"): ("numerical", "lower_bound", "upper_bound", "approx",
                       "asymptotic", "shannon", "montecarlo"),
    ("adr", "csi"): ("numerical", "closed_form", "approx", "asymptotic",
                     "shannon", "montecarlo"),
    ("adep", "nocsi"): ("numerical", "linearized", "approx", "asymptotic",
                        "montecarlo"),
    ("adep", "csi"): ("numerical", "linearized", "asymptotic", "montecarlo"),
}


@dataclass(frozen=True)
class SweepSpec:
    """One sweep request: metric/mode/methods over an SNR grid and N list."""

    metric: str
    mode: str
    methods: tuple
    snr_start_db: float
    snr_stop_db: float
    snr_step_db: float
    n_values: tuple
    alpha: float = 1.0
    beta: float = 1.0
    blocklength: int = 200
    target_eps: float = 1e-8
    packet_bits: float = 100.0
    mc: McConfig = field(default_factory=McConfig)
    rs_convention: str = "nats"

    def __post_init__(self):
        if self.metric not in ("adr", "adep"):
            raise ValueError(f"metric must be 'adr' or 'adep', got {self.metric!r}")
        if self.mode not in ("csi", "nocsi"):
            raise ValueError(f"mode must be 'csi' or 'nocsi', got {self.mode!r}")
        if not self.methods:
            raise ValueError("at least one method is required")
        valid = VALID_METHODS[(self.metric, self.mode)]
        for meth in self.methods:
            if meth not in valid:
                raise ValueError(
                    f"method {meth!r} not valid for {self.metric}/{self.mode}; "
                    f"choose from {valid}")
        if not self.snr_step_db > 0.0:
            raise ValueError("snr_step_db must be > 0")
        if self.snr_stop_db < self.snr_start_db:
            raise ValueError("snr_stop_db must be >= snr_start_db")
        if not self.n_values:
            raise ValueError("at least one N value is required")
        if self.rs_convention not in ("nats", "bits"):
            raise ValueError("rs_convention must be 'nats' or 'bits'")

    @property
    def snr_grid_db(self) -> np.ndarray:
        count = int(round((self.snr_stop_db - self.snr_start_db) / self.snr_step_db)) + 1
        grid = self.snr_start_db + self.snr_step_db * np.arange(count)
        return grid[grid <= self.snr_stop_db + 1e-9]


@dataclass
class MetricCurve:
    """One labeled sweep trace; y entries are None where evaluation failed."""

    metric: str
    mode: str
    method: str
    n: int
    x: list
    y: list
    y_err: list | None = None
    notes: list | None = None

    def __post_init__(self):
        if len(self.x) != len(self.y):
            raise ValueError("x and y must have equal length")
        if any(b <= a for a, b in zip(self.x, self.x[1:])):
            raise ValueError("x must be strictly increasing")
        if self.notes is None:
            self.notes = [""] * len(self.x)


def _evaluate_point(metric: str, mode: str, method: str, params: SystemParams,
                    mc: McConfig, rs_convention: str):
    """Dispatch one (method, params) evaluation; returns (value, stderr|None)."""
    if method == "montecarlo":
        if metric == "adr":
            est = montecarlo.empirical_adr(params, mode, mc)
        else:
            est = montecarlo.empirical_adep(params, mode, mc)
        return est.value, est.stderr

    if metric == "adr" and mode == "nocsi":
        fn = {
            "numerical": metrics_nocsi.adr_numerical,
            "lower_bound": metrics_nocsi.adr_lower_bound,
            "approx": metrics_nocsi.adr_lower_bound,
            "upper_bound": metrics_nocsi.adr_upper_bound,
            "shannon": metrics_nocsi.adr_upper_bound,
            "asymptotic": metrics_nocsi.adr_asymptotic,
        }[method]
        return fn(params), None
    if metric == "adr" and mode == "csi":
        fn = {
            "numerical": metrics_csi.adr_numerical_gamma,
            "closed_form": metrics_csi.adr_closed_form,
            "approx": metrics_csi.adr_closed_form,
            "asymptotic": metrics_csi.adr_simplified,
            "shannon": metrics_csi.shannon_gamma,
        }[method]
        return fn(params), None
    if metric == "adep" and mode == "nocsi":
        if method == "asymptotic":
            return metrics_nocsi.adep_asymptotic(params, rs_convention=rs_convention), None
        fn = {
            "numerical": metrics_nocsi.adep_numerical,
            "linearized": metrics_nocsi.adep_linearized,
            "approx": metrics_nocsi.adep_approx,
        }[method]
        return fn(params), None
    # adep / csi
    if method == "asymptotic":
        return metrics_csi.adep_asymptotic(params, rs_convention=rs_convention), None
    fn = {
        "numerical": metrics_csi.adep_numerical,
        "linearized": metrics_csi.adep_linearized,
    }[method]
    return fn(params), None


def run_sweep(spec: SweepSpec) -> list[MetricCurve]:
    """Evaluate every (method, N, SNR) combination the sweep spec requests.

    Per-point failures are recorded as missing values with a reason note;
    the sweep itself never aborts on them.
    """
    grid = spec.snr_grid_db
    curves = []
    for method in sorted(spec.methods):
        for n in sorted(spec.n_values):
            ys, errs, notes = [], [], []
            for snr_db in grid:
                params = SystemParams(
                    n_elements=int(n), alpha=spec.alpha, beta=spec.beta,
                    rho=10.0 ** (snr_db / 10.0), blocklength=spec.blocklength,
                    target_eps=spec.target_eps, packet_bits=spec.packet_bits)
                try:
                    val, err = _evaluate_point(
                        spec.metric, spec.mode, method, params, spec.mc,
                        spec.rs_convention)
                    ys.append(val)
                    errs.append(err)
                    notes.append("")
                except (ToleranceError, NonConvergenceError, OverflowError,
                        ValueError) as exc:
                    ys.append(None)
                    errs.append(None)
                    notes.append(f"{type(exc).__name__}: {exc}")
            has_err = any(e is not None for e in errs)
            curves.append(MetricCurve(
                metric=spec.metric, mode=spec.mode, method=method, n=int(n),
                x=[float(v) for v in grid], y=ys,
                y_err=errs if has_err else None, notes=notes))
    return curves


def _fmt(v) -> str:
    return "" if v is None else format(float(v), ".17g")


def emit_csv(curves: list[MetricCurve], destination) -> None:
    """Write curves as CSV rows sorted by (method, n, snr_db)."""

    def write(fh):
        fh.write("metric,mode,method,n,snr_db,value,stderr,note\n")
        for c in sorted(curves, key=lambda c: (c.method, c.n)):
            errs = c.y_err or [None] * len(c.x)
            for x, y, e, note in zip(c.x, c.y, errs, c.notes):
                fh.write(f"{c.metric},{c.mode},{c.method},{c.n},"
                         f"{_fmt(x)},{_fmt(y)},{_fmt(e)},{note}\n")

    if isinstance(destination, (str, bytes)) or hasattr(destination, "__fspath__"):
        try:
            with open(destination, "w", encoding="utf-8", newline="") as fh:
                write(fh)
        except OSError as exc:
            raise OSError(f"cannot write CSV to {destination!r}: {exc}") from exc
    else:
        write(destination)


PRESETS = {
    "fig2": dict(metric="adr", mode="nocsi",
                 methods="numerical,lower_bound,asymptotic,shannon,montecarlo",
                 n="20,40", snr_start=-10.0, snr_stop=30.0, snr_step=2.0),
    "fig3": dict(metric="adep", mode="nocsi",
                 methods="numerical,linearized,approx,asymptotic,montecarlo",
                 n="20,40", snr_start=0.0, snr_stop=40.0, snr_step=2.0),
    "fig4": dict(metric="adr", mode="csi",
                 methods="numerical,closed_form,asymptotic,shannon,montecarlo",
                 n="20,40", snr_start=-10.0, snr_stop=30.0, snr_step=2.0),
    "fig5": dict(metric="adep", mode="csi",
                 methods="numerical,linearized,montecarlo",
                 n="20,40", snr_start=0.0, snr_stop=40.0, snr_step=2.0),
}

_BASE_DEFAULTS = dict(
    metric="adr", mode="nocsi", methods="numerical", n="20",
    snr_start=-10.0, snr_stop=30.0, snr_step=2.0,
    m=200, eps=1e-8, bits=100.0, alpha=1.0, beta=1.0,
    trials=10_000, seed=0, batch=20_000, rs_convention="nats", out="-",
)

_FLOAT_KEYS = ("snr_start", "snr_stop", "snr_step", "eps", "bits", "alpha", "beta")
_INT_KEYS = ("m", "trials", "seed", "batch")


def parse_config(path: str) -> dict:
    """Flat key=value config file; '#' starts a comment, blank lines ignored."""
    settings = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected key=value, got {raw!r}")
            key, value = (part.strip() for part in line.split("=", 1))
            if key not in _BASE_DEFAULTS:
                raise ValueError(f"{path}:{lineno}: unknown key {key!r}")
            settings[key] = value
    return settings


class _CliError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _CliError(message)


def _build_parser() -> _Parser:
    p = _Parser(prog="irslink", description=(
        "Sweep average data rate (adr) or average decoding error probability "
        "(adep) of the reflected link over an SNR grid and emit CSV."))
    p.add_argument("--preset", choices=sorted(PRESETS),
                   help="figure preset supplying metric/mode/methods/N/grid")
    p.add_argument("--config", help="flat key=value config file")
    p.add_argument("--metric", choices=["adr", "adep"])
    p.add_argument("--mode", choices=["csi", "nocsi"])
    p.add_argument("--methods", help="comma-separated method list")
    p.add_argument("--n", help="comma-separated element counts")
    p.add_argument("--snr-start", type=float, dest="snr_start", help="grid start in dB")
    p.add_argument("--snr-stop", type=float, dest="snr_stop", help="grid stop in dB")
    p.add_argument("--snr-step", type=float, dest="snr_step", help="grid step in dB")
    p.add_argument("--m", type=int, help="blocklength (channel uses)")
    p.add_argument("--eps", type=float, help="error target for rate sweeps")
    p.add_argument("--bits", type=float, help="packet size for error sweeps")
    p.add_argument("--alpha", type=float, help="incoming-hop variance")
    p.add_argument("--beta", type=float, help="outgoing-hop variance")
    p.add_argument("--trials", type=int, help="Monte-Carlo trials")
    p.add_argument("--seed", type=int, help="Monte-Carlo seed")
    p.add_argument("--batch", type=int, help="Monte-Carlo batch size")
    p.add_argument("--rs-convention", choices=["nats", "bits"], dest="rs_convention",
                   help="rate convention for asymptotic error formulas")
    p.add_argument("--out", help="output CSV path, '-' for stdout")
    return p


def _merge_settings(args: argparse.Namespace) -> dict:
    merged = dict(_BASE_DEFAULTS)
    if args.preset:
        merged.update(PRESETS[args.preset])
    if args.config:
        merged.update(parse_config(args.config))
    for key in _BASE_DEFAULTS:
        val = getattr(args, key, None)
        if val is not None:
            merged[key] = val
    for key in _FLOAT_KEYS:
        merged[key] = float(merged[key])
    for key in _INT_KEYS:
        merged[key] = int(merged[key])
    return merged


def _spec_from_settings(s: dict) -> SweepSpec:
    methods = tuple(t.strip() for t in str(s["methods"]).split(",") if t.strip())
    n_values = tuple(int(t) for t in str(s["n"]).split(",") if t.strip())
    return SweepSpec(
        metric=s["metric"], mode=s["mode"], methods=methods,
        snr_start_db=s["snr_start"], snr_stop_db=s["snr_stop"],
        snr_step_db=s["snr_step"], n_values=n_values,
        alpha=s["alpha"], beta=s["beta"], blocklength=s["m"],
        target_eps=s["eps"], packet_bits=s["bits"],
        mc=McConfig(trials=s["trials"], seed=s["seed"], batch=s["batch"]),
        rs_convention=s["rs_convention"])


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        settings = _merge_settings(args)
        spec = _spec_from_settings(settings)
    except (_CliError, ValueError, OSError) as exc:
        print(f"irslink: error: {exc}", file=sys.stderr)
        return 1

    curves = run_sweep(spec)
    out = settings["out"]
    try:
        if out == "-":
            emit_csv(curves, sys.stdout)
        else:
            emit_csv(curves, out)
    except OSError as exc:
        print(f"irslink: error: {exc}", file=sys.stderr)
        return 1
    failures = sum(1 for c in curves for y in c.y if y is None)
    if failures:
        print(f"irslink: {failures} point(s) failed; see note column", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())

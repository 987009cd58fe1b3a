"""Command-line front end.

Subcommands: keyrate, cost, simulate, sample-audit, noise. Settings are
resolved as command-line flag, then ``--config`` JSON, then built-in default.

Exit codes: 0 success, 2 usage error, 3 every sweep point infeasible,
4 resource guard violated.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from itertools import product
from pathlib import Path

import numpy as np

from . import __version__
from ._accel import backend
from .chainsim import SimConfig, distill_key, mean_and_std, run_trials
from .cost import CostModel, evaluate_costs
from .errors import GuardError, InfeasibleParametersError, InstanceTooLargeError
from .params import (
    DEFAULT_EPS,
    DEFAULT_EPS_ABORT,
    DEFAULT_EPS_PRIME,
    DEFAULT_PX,
    ProtocolParams,
    abort_budget,
    derive_sizes,
    failure_probability,
    pa_epsilon,
    sifted_fraction,
)
from .rates import stn_key_length, stn_total_noise, tn_key_length
from .sampling import (
    MAX_ENUMERATED_SUBSETS,
    SamplingInstance,
    analytic_failure_bound,
    balanced_word,
    failure_by_weight,
    mc_failure_estimate,
)

log = logging.getLogger("stnchain")

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_INFEASIBLE = 3
EXIT_GUARD = 4

# N stays unset so keyrate/cost can tell "no N given" (use the default grid)
# from an explicit list
DEFAULT_N = "1e6"

DEFAULTS = {
    "N": None,
    "p": "2",
    "Q": "0.02",
    "px": str(DEFAULT_PX),
    "eps": DEFAULT_EPS,
    "eps_abort": DEFAULT_EPS_ABORT,
    "eps_prime": DEFAULT_EPS_PRIME,
    "seed": 0,
    "trials": None,
    "grid": None,
    "sweep": None,
    "out": ".",
    "plot": False,
    "threads": 1,
    "abort_policy": "paper-abort",
    "transcripts": False,
    "m": None,
    "delta": "0.05,0.1,0.15,0.2,0.25,0.3,0.35,0.4,0.45,0.5",
    "max_subsets": MAX_ENUMERATED_SUBSETS,
}

DEFAULT_GRIDS = {
    "keyrate": ("N", "1e4:1e10:25:log"),
    "cost": ("N", "1e6:1e12:25:log"),
}

DEFAULT_TRIALS = {"simulate": 10, "sample-audit": 100_000}

KEYRATE_COLUMNS = [
    "N", "p", "Q", "p_X", "eps", "eps_abort", "eps_prime", "beta", "beta_prime",
    "n0", "m0", "delta", "mu", "w_total", "l_stn", "l_tn", "rate_stn", "rate_tn", "reason",
]
COST_COLUMNS = [
    "N", "p", "Q", "p_X", "w_total", "l_stn", "l_tn", "J", "cN", "cost_stn", "cost_tn", "crossover", "reason",
]
TRIAL_COLUMNS = [
    "trial", "aborted", "abort_flags", "n0_obs", "m0_obs", "w_obs", "sifted_fraction_mean",
    "l_realized", "l_closed_form_observed", "keys_match",
]
AUDIT_COLUMNS = ["N", "m", "delta", "method", "weight", "failure", "ci_low", "ci_high", "bound", "violation"]


class UsageError(Exception):
    pass


# --------------------------------------------------------------------------
# argument parsing

def parse_grid(text: str) -> np.ndarray:
    """``start:stop:points:lin|log`` -> grid values."""
    parts = text.split(":")
    if len(parts) != 4:
        raise UsageError(f"grid must look like start:stop:points:lin|log, got {text!r}")
    start, stop, points, kind = parts
    try:
        start, stop, points = float(start), float(stop), int(points)
    except ValueError as exc:
        raise UsageError(f"bad grid {text!r}: {exc}") from None
    if points < 1:
        raise UsageError("grid must have at least one point")
    if kind == "lin":
        return np.linspace(start, stop, points)
    if kind == "log":
        if start <= 0 or stop <= 0:
            raise UsageError("log grid bounds must be positive")
        return np.logspace(math.log10(start), math.log10(stop), points)
    raise UsageError(f"grid kind must be lin or log, got {kind!r}")


def parse_list(value, cast=float) -> list:
    if isinstance(value, (list, tuple)):
        items = list(value)
    elif isinstance(value, (int, float)):
        items = [value]
    else:
        items = [v for v in str(value).split(",") if v.strip()]
    try:
        out = [cast(float(v)) if cast is int else cast(v) for v in items]
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    if not out:
        raise UsageError("empty value list")
    return out


def _add_common(sp):
    sp.add_argument("--N", help="signals per link (comma list allowed, e.g. 1e6,1e8)")
    sp.add_argument("--p", help="number of STNs (comma list allowed)")
    sp.add_argument("--Q", help="link-level noise (comma list allowed)")
    sp.add_argument("--px", help="X-basis probability p_X (comma list allowed)")
    sp.add_argument("--eps", type=float, help="security parameter (default 1e-30)")
    sp.add_argument("--eps-abort", dest="eps_abort", type=float, help="abort budget (default 1e-10)")
    sp.add_argument("--eps-prime", dest="eps_prime", type=float, help="TN baseline budget (default 1e-10)")
    sp.add_argument("--seed", type=int, help="master RNG seed")
    sp.add_argument("--trials", type=int, help="Monte Carlo trial count")
    sp.add_argument("--grid", help="sweep grid start:stop:points:lin|log")
    sp.add_argument("--sweep", choices=["N", "Q", "px"], help="variable the grid replaces")
    sp.add_argument("--out", help="output directory")
    sp.add_argument("--plot", action="store_true", default=None, help="also write an SVG figure")
    sp.add_argument("--config", help="JSON file with default settings")
    sp.add_argument("--threads", type=int, help="worker threads")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="stnchain", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("keyrate", help="STN vs TN finite key lengths over a sweep")
    _add_common(sp)
    sp = sub.add_parser("cost", help="cost per secret key bit over a sweep")
    _add_common(sp)
    sp = sub.add_parser("simulate", help="Monte Carlo runs of the chain protocol")
    _add_common(sp)
    sp.add_argument("--abort-policy", dest="abort_policy", choices=["paper-abort", "observe-only"])
    sp.add_argument("--transcripts", action="store_true", default=None, help="write per-trial JSON transcripts")
    sp = sub.add_parser("sample-audit", help="sampling failure probability against its analytic bound")
    _add_common(sp)
    sp.add_argument("--m", help="sample sizes (comma list; default every m <= N/2)")
    sp.add_argument("--delta", help="tolerances (comma list)")
    sp.add_argument("--max-subsets", dest="max_subsets", type=int, help="enumeration limit before switching to MC")
    sp = sub.add_parser("noise", help="print the total chain noise table")
    _add_common(sp)
    return ap


def resolve_settings(args: argparse.Namespace) -> dict:
    settings = dict(DEFAULTS)
    if getattr(args, "config", None):
        try:
            with open(args.config, encoding="utf-8") as fh:
                cfg = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config {args.config}: {exc}") from None
        unknown = set(cfg) - set(DEFAULTS)
        if unknown:
            raise UsageError(f"unknown config keys: {sorted(unknown)}")
        settings.update(cfg)
    for key in DEFAULTS:
        val = getattr(args, key, None)
        if val is not None:
            settings[key] = val
    if settings["trials"] is None:
        settings["trials"] = DEFAULT_TRIALS.get(args.command, 1000)
    return settings


def _point_axes(settings):
    return {
        "N": parse_list(settings["N"] if settings["N"] is not None else DEFAULT_N, int),
        "p": parse_list(settings["p"], int),
        "Q": parse_list(settings["Q"]),
        "px": parse_list(settings["px"]),
    }


def _axes(settings, command):
    """Lists of N, p, Q, p_X values, with the swept one replaced by the grid."""
    axes = _point_axes(settings)
    sweep, grid = settings["sweep"], settings["grid"]
    if grid is None and sweep is None and command in DEFAULT_GRIDS and settings["N"] is None:
        sweep, grid = DEFAULT_GRIDS[command]
    if grid is not None:
        sweep = sweep or ("Q" if command == "noise" else DEFAULT_GRIDS.get(command, ("N",))[0])
        values = parse_grid(grid)
        axes[sweep] = [int(round(v)) for v in values] if sweep == "N" else [float(v) for v in values]
    elif sweep is not None:
        raise UsageError("--sweep needs --grid")
    return axes, sweep


# --------------------------------------------------------------------------
# CSV output

def fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        v = float(value)
        if not math.isfinite(v):
            raise ValueError(f"non-finite value {v!r} in CSV output")
        return f"{v:.17g}"
    return str(value)


def write_csv(path: Path, columns: list, rows: list) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([fmt(row.get(c)) for c in columns])
    return path


PA_NOTE = (
    "pa_epsilon = 9 eps + 4 sqrt(eps) is applied as stated, although the smoothing "
    "term inside failure_probability scales as eps^(1/3); the two are not reconciled"
)


def write_meta(csv_path: Path, settings: dict, params: list) -> Path:
    """Sidecar JSON with the security budgets behind a CSV. No timestamps, so reruns match."""
    by_p = {}
    for prm in params:
        by_p.setdefault(prm.p, prm)
    meta = {
        "stnchain_version": __version__,
        "kernel_backend": backend(),
        "eps": float(settings["eps"]),
        "eps_abort": float(settings["eps_abort"]),
        "eps_prime": float(settings["eps_prime"]),
        "pa_epsilon": pa_epsilon(float(settings["eps"])),
        "failure_probability_by_p": {str(p): failure_probability(prm) for p, prm in sorted(by_p.items())},
        "abort_budget_by_p": {str(p): abort_budget(prm) for p, prm in sorted(by_p.items())},
        "notes": [PA_NOTE, "abort_budget is reported separately and is not folded into failure_probability"],
    }
    path = csv_path.with_suffix(".meta.json")
    path.write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path


def _params(settings, N, p, Q, px) -> ProtocolParams:
    try:
        return ProtocolParams(
            N=N, p=p, Q=Q, p_X=px,
            eps=float(settings["eps"]),
            eps_abort=float(settings["eps_abort"]),
            eps_prime=float(settings["eps_prime"]),
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _parallel_map(fn, items, threads):
    if threads > 1:
        with ThreadPoolExecutor(threads) as ex:
            return list(ex.map(fn, items))
    return [fn(i) for i in items]


# --------------------------------------------------------------------------
# subcommands

def keyrate_row(params: ProtocolParams) -> dict:
    row = {
        "N": params.N, "p": params.p, "Q": params.Q, "p_X": params.p_X,
        "eps": params.eps, "eps_abort": params.eps_abort, "eps_prime": params.eps_prime,
        "w_total": stn_total_noise(params.Q, params.p),
    }
    try:
        sizes = derive_sizes(params)
    except InfeasibleParametersError as exc:
        row.update(beta=0.0, beta_prime=0.0, n0=0, m0=0, delta=0.0, mu=0.0,
                   l_stn=0, l_tn=0, rate_stn=0.0, rate_tn=0.0, reason=f"infeasible sizes: {exc}")
        return row
    stn = stn_key_length(sizes, row["w_total"], params.eps)
    tn = tn_key_length(sizes, params.Q, params.eps_prime)
    reasons = []
    if not stn.feasible:
        reasons.append("stn: no positive key")
    if not tn.feasible:
        reasons.append("tn: no positive key")
    row.update(
        beta=sizes.beta, beta_prime=sizes.beta_prime, n0=sizes.n0, m0=sizes.m0,
        delta=sizes.delta, mu=sizes.mu,
        l_stn=stn.key_length_clamped, l_tn=tn.key_length_clamped,
        rate_stn=stn.per_signal_rate, rate_tn=tn.per_signal_rate,
        reason="; ".join(reasons),
    )
    return row


def cmd_keyrate(settings: dict) -> int:
    axes, _ = _axes(settings, "keyrate")
    combos = list(product(axes["p"], axes["Q"], axes["px"], axes["N"]))
    params = [_params(settings, N, p, Q, px) for p, Q, px, N in combos]
    rows = _parallel_map(keyrate_row, params, int(settings["threads"]))
    out = Path(settings["out"])
    path = write_csv(out / "keyrate.csv", KEYRATE_COLUMNS, rows)
    write_meta(path, settings, params)
    print(path)
    if settings["plot"]:
        from .svgplot import plot_keyrate

        print(plot_keyrate(path, out / "keyrate.svg"))
    if not any(r["l_stn"] > 0 or r["l_tn"] > 0 for r in rows):
        log.error("no grid point yields a positive key")
        return EXIT_INFEASIBLE
    return EXIT_OK


def cost_row(params: ProtocolParams) -> dict:
    r = evaluate_costs(params, CostModel())
    return {
        "N": r.N, "p": r.p, "Q": r.Q, "p_X": params.p_X, "w_total": r.w_total,
        "l_stn": r.l_stn, "l_tn": r.l_tn, "J": r.J, "cN": r.cN,
        "cost_stn": r.cost_stn, "cost_tn": r.cost_tn, "reason": r.reason,
    }


def _stn_not_cheaper(row):
    if row["cost_stn"] is None:
        return True
    return row["cost_tn"] is not None and row["cost_stn"] >= row["cost_tn"]


def cmd_cost(settings: dict) -> int:
    axes, sweep = _axes(settings, "cost")
    series = list(product(axes["p"], axes["Q"], axes["px"], axes["N"]))
    params = [_params(settings, N, p, Q, px) for p, Q, px, N in series]
    rows = _parallel_map(cost_row, params, int(settings["threads"]))

    # mark the first grid point of each series where the STN chain stops being cheaper
    swept_col = {"px": "p_X"}.get(sweep, sweep)
    crossed = set()
    for row in rows:
        key = tuple(row[c] for c in ("N", "p", "Q", "p_X") if c != swept_col)
        row["crossover"] = False
        if key not in crossed and _stn_not_cheaper(row):
            crossed.add(key)
            row["crossover"] = True
    out = Path(settings["out"])
    path = write_csv(out / "cost.csv", COST_COLUMNS, rows)
    write_meta(path, settings, params)
    print(path)
    if settings["plot"]:
        from .svgplot import plot_cost

        print(plot_cost(path, out / "cost.svg"))
    if not any(r["cost_stn"] is not None or r["cost_tn"] is not None for r in rows):
        log.error("no grid point has a defined cost")
        return EXIT_INFEASIBLE
    return EXIT_OK


def _single(axes, name):
    vals = axes[name]
    if len(vals) != 1:
        raise UsageError(f"simulate takes a single value for {name}, got {vals}")
    return vals[0]


def cmd_simulate(settings: dict) -> int:
    axes = _point_axes(settings)
    params = _params(settings, *(_single(axes, k) for k in ("N", "p", "Q", "px")))
    seed = int(settings["seed"])
    try:
        cfg = SimConfig(params=params, seed=seed, trials=int(settings["trials"]), abort_policy=settings["abort_policy"])
    except GuardError:
        raise
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    transcripts = run_trials(cfg, threads=int(settings["threads"]))

    out = Path(settings["out"])
    trial_rows = []
    for tr in transcripts:
        row = {
            "trial": tr.trial,
            "aborted": tr.aborted,
            "abort_flags": " ".join(f"link{link + 1}:{check}" for link, check in tr.abort_flags),
            "n0_obs": tr.n0_obs,
            "m0_obs": tr.m0_obs,
            "w_obs": tr.w_obs,
            "sifted_fraction_mean": float(np.mean(tr.sifted_fractions)),
        }
        if not tr.aborted:
            dk = distill_key(tr, params, seed)
            row.update(
                l_realized=len(dk.alice_key),
                l_closed_form_observed=dk.ledger.key_length_clamped,
                keys_match=dk.alice_key == dk.bob_key,
            )
        trial_rows.append(row)
        if settings["transcripts"]:
            tdir = out / "transcripts"
            tdir.mkdir(parents=True, exist_ok=True)
            (tdir / f"trial_{tr.trial:06d}.json").write_text(tr.to_json(sort_keys=True), encoding="utf-8")

    kept = [r for r in trial_rows if not r["aborted"]]
    w_mean, w_std = mean_and_std(r["w_obs"] for r in kept)
    l_mean, l_std = mean_and_std(r["l_realized"] for r in kept)
    try:
        sizes = derive_sizes(params)
        l_closed = stn_key_length(sizes, stn_total_noise(params.Q, params.p), params.eps).key_length_clamped
    except InfeasibleParametersError:
        l_closed = 0
    summary = [
        ("N", params.N), ("p", params.p), ("Q", params.Q), ("p_X", params.p_X), ("seed", seed),
        ("trials", len(transcripts)),
        ("aborted", sum(r["aborted"] for r in trial_rows)),
        ("abort_rate", sum(r["aborted"] for r in trial_rows) / len(trial_rows)),
        ("w_obs_mean", w_mean if kept else None),
        ("w_obs_std", w_std if kept else None),
        ("w_total_closed_form", stn_total_noise(params.Q, params.p)),
        ("sifted_fraction_mean", float(np.mean([r["sifted_fraction_mean"] for r in trial_rows]))),
        ("sifted_fraction_expected", sifted_fraction(params.p_X)),
        ("l_realized_mean", l_mean if kept else None),
        ("l_realized_std", l_std if kept else None),
        ("l_closed_form", l_closed),
        ("keys_match_all", all(r["keys_match"] for r in kept)),
    ]
    summary_path = write_csv(out / "simulate.csv", ["metric", "value"], [{"metric": k, "value": v} for k, v in summary])
    write_meta(summary_path, settings, [params])
    print(summary_path)
    print(write_csv(out / "simulate_trials.csv", TRIAL_COLUMNS, trial_rows))
    return EXIT_OK


def audit_rows(N: int, ms: list, deltas: list, trials: int, seed: int, max_subsets: int) -> list:
    rows = []
    for m in ms:
        if not 0 < m <= N // 2:
            raise UsageError(f"m={m} must satisfy 0 < m <= N/2 for N={N}")
        exact = math.comb(N, m) <= max_subsets
        for delta in deltas:
            bound = analytic_failure_bound(N, m, delta)
            if exact:
                try:
                    profile = failure_by_weight(N, m, delta, max_subsets)
                except InstanceTooLargeError:
                    exact = False
                else:
                    k = int(np.argmax(profile))
                    f = float(profile[k])
                    rows.append(dict(N=N, m=m, delta=delta, method="exact", weight=k, failure=f,
                                     ci_low=f, ci_high=f, bound=bound, violation=f > bound))
                    continue
            word = balanced_word(N)
            inst = SamplingInstance.from_folded(word, 0, delta, m)
            est = mc_failure_estimate(inst, trials, seed)
            rows.append(dict(N=N, m=m, delta=delta, method="mc", weight=word.weight(), failure=est.estimate,
                             ci_low=est.lower, ci_high=est.upper, bound=bound, violation=est.estimate > bound))
    return rows


def cmd_sample_audit(settings: dict) -> int:
    Ns = parse_list(settings["N"] if settings["N"] is not None else DEFAULT_N, int)
    deltas = parse_list(settings["delta"])
    if any(d <= 0 for d in deltas):
        raise UsageError("delta values must be positive")
    rows = []
    for N in Ns:
        if N < 2:
            raise UsageError("N must be at least 2")
        ms = parse_list(settings["m"], int) if settings["m"] is not None else list(range(1, N // 2 + 1))
        rows.extend(audit_rows(N, ms, deltas, int(settings["trials"]), int(settings["seed"]),
                               int(settings["max_subsets"])))
    path = write_csv(Path(settings["out"]) / "sample_audit.csv", AUDIT_COLUMNS, rows)
    print(path)
    bad = sum(r["violation"] for r in rows)
    if bad:
        log.warning("%d row(s) exceed the analytic bound", bad)
    return EXIT_OK


def cmd_noise(settings: dict) -> int:
    axes, _ = _axes(settings, "noise")
    rows = [{"Q": Q, "p": p, "w_total": stn_total_noise(Q, p)} for p in axes["p"] for Q in axes["Q"]]
    print(f"{'Q':>10} {'p':>4} {'w_total':>22}")
    for r in rows:
        print(f"{r['Q']:>10.6g} {r['p']:>4d} {r['w_total']:>22.15g}")
    if settings["out"] != ".":
        print(write_csv(Path(settings["out"]) / "noise.csv", ["Q", "p", "w_total"], rows))
    return EXIT_OK


COMMANDS = {
    "keyrate": cmd_keyrate,
    "cost": cmd_cost,
    "simulate": cmd_simulate,
    "sample-audit": cmd_sample_audit,
    "noise": cmd_noise,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s: %(message)s")
    try:
        settings = resolve_settings(args)
        return COMMANDS[args.command](settings)
    except UsageError as exc:
        print(f"stnchain {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except GuardError as exc:
        print(f"stnchain {args.command}: guard violated: {exc}", file=sys.stderr)
        return EXIT_GUARD


if __name__ == "__main__":
    sys.exit(main())

"""``seqrd`` command line: analytic traces, solvers and the Monte Carlo oracle.

Every command writes CSV (header row, ``t`` first where there is a time
axis, 17 significant digits) or JSON to ``--output`` or stdout. Options may
also come from ``--config FILE.json`` whose keys are flag names; flags given
on the command line win.

Exit codes: 0 ok, 1 comparison failed, 2 invalid input, 3 solver failure.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import sys

import numpy as np

from . import delayed, kaspi, mcsim, random_rate, region, source
from .errors import BudgetError, SolverError, ValidationError

class CLIError(Exception):
    def __init__(self, message, code=2):
        super().__init__(message)
        self.code = code


def _floats(text: str) -> list[float]:
    return [float(v) for v in str(text).split(",") if v.strip()]


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.17g}"
    return str(v)


class Table:
    def __init__(self, columns, rows, extra=None):
        self.columns = list(columns)
        self.rows = [list(r) for r in rows]
        self.extra = extra or {}

    def csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.columns)
        for r in self.rows:
            w.writerow([_fmt(v) for v in r])
        return buf.getvalue()

    def json(self) -> str:
        cols = {c: [_jsonable(r[i]) for r in self.rows] for i, c in enumerate(self.columns)}
        return json.dumps({**cols, **{k: _jsonable(v) for k, v in self.extra.items()}}, indent=2)


def _jsonable(v):
    if isinstance(v, (np.floating, np.integer, np.bool_)):
        return v.item()
    if isinstance(v, np.ndarray):
        return v.tolist()
    if hasattr(v, "value"):
        return v.value
    return v


# ------------------------------------------------------------------ parser


def _common(p, *names):
    flag_opts = {
        "alpha": dict(type=str, help="process coefficient alpha (comma list allowed for region)"),
        "w": dict(type=str, help="innovation variance W (comma list allowed for region)"),
        "rate": dict(type=str, help="rate R in bits per sample (comma list allowed for region)"),
        "beta": dict(type=float, help="packet arrival probability"),
        "T": dict(type=int, help="horizon"),
        "max-n": dict(type=int, help="largest packet count to evaluate"),
        "objective": dict(choices=["squared", "single"], help="E[2^-2r] (squared) or E[2^-r] (single)"),
        "samples": dict(type=int, help="Monte Carlo sample count"),
        "seed": dict(type=int, help="master seed"),
        "shards": dict(type=int, help="independent RNG substreams"),
        "workers": dict(type=int, help="threads used to run shards"),
        "literal-alpha": dict(action="store_true", default=None, help="use alpha instead of alpha^2 in the side-information design variances"),
        "S": dict(type=float, help="source variance"),
        "Z": dict(type=float, help="residual variance given side information"),
        "d-minus": dict(type=float, help="distortion target without side information"),
        "d-plus": dict(type=float, help="distortion target with side information"),
        "support": dict(type=str, help="rate distribution as 'r1:p1,r2:p2,...'"),
        "packets": dict(type=int, help="split each frame into this many packets (simulate)"),
        "scheme": dict(choices=[s.value for s in mcsim.Scheme], help="simulated scheme"),
        "feedback": dict(choices=[f.value for f in mcsim.Feedback], help="feedback model"),
        "frames": dict(type=int, help="frame length N"),
        "sigmas": dict(type=float, help="tolerance in standard errors"),
        "tol": dict(type=float, help="absolute tolerance when comparing two files"),
        "points": dict(type=int, help="number of beta points in a sweep"),
    }
    for n in names:
        p.add_argument(f"--{n}", dest=n.replace("-", "_"), **flag_opts[n])


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="seqrd", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, help, *flags):
        p = sub.add_parser(name, help=help)
        _common(p, *flags)
        p.add_argument("--output", help="output file (default stdout)")
        p.add_argument("--format", choices=["csv", "json"], default=None)
        p.add_argument("--config", help="JSON file whose keys are flag names")
        return p

    add("region", "optimal trace for deterministic rates", "alpha", "w", "rate", "T")
    add("steady", "steady-state distortion (erasure steady state with --beta)", "alpha", "w", "rate", "beta")
    add("random-rate", "trace under an i.i.d. discrete rate distribution", "alpha", "w", "T", "support")
    add("erasure", "trace with packet erasures and instantaneous feedback", "alpha", "w", "rate", "beta", "T")
    add("packets", "rate factors for 1..max-n packets per frame", "rate", "beta", "max-n", "objective", "points")
    add("kaspi", "two-sided side-information rate of one operating point", "S", "Z", "d-minus", "d-plus")
    add("invert", "minimize the arrival-weighted distortion at a fixed rate", "S", "Z", "rate", "beta")
    p = add("delayed", "average distortion of the side-information scheme under delayed feedback",
            "alpha", "w", "rate", "beta", "T", "samples", "seed", "shards", "literal-alpha")
    g = p.add_mutually_exclusive_group()
    g.add_argument("--exact", dest="method", action="store_const", const="exact")
    g.add_argument("--mc", dest="method", action="store_const", const="montecarlo")
    add("baselines", "no-prediction, worst-case and best-case baselines", "alpha", "w", "rate", "beta", "T")
    add("simulate", "sample-path Monte Carlo against the analytic trace",
        "alpha", "w", "rate", "beta", "T", "samples", "seed", "shards", "workers",
        "scheme", "feedback", "frames", "packets", "sigmas")
    p = add("compare", "re-check an emitted CSV, or diff two CSVs column by column", "sigmas", "tol")
    p.add_argument("files", nargs="+", help="one simulate CSV, or two CSVs to diff")
    return parser


DEFAULTS = {
    "T": 20, "objective": "squared", "samples": 100_000, "seed": 0, "shards": 1,
    "workers": 1, "scheme": "greedy", "feedback": "instantaneous", "frames": 1,
    "sigmas": 4.0, "tol": 0.0, "points": 101, "literal_alpha": False, "method": "exact",
    "format": "csv",
}


def _apply_config(parser, argv) -> argparse.Namespace:
    args = parser.parse_args(argv)
    if args.config:
        try:
            with open(args.config) as fh:
                cfg = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise CLIError(f"--config: cannot read {args.config}: {exc}")
        for key, val in cfg.items():
            dest = key.replace("-", "_")
            if key in ("exact", "mc"):
                dest, val = "method", ("exact" if key == "exact" else "montecarlo") if val else None
            if not hasattr(args, dest):
                raise CLIError(f"--config: unknown key {key!r} for command {args.command}")
            if getattr(args, dest) is None:
                if isinstance(val, list):
                    val = ",".join(str(v) for v in val)
                setattr(args, dest, val)
    for dest, val in DEFAULTS.items():
        if getattr(args, dest, "absent") is None:
            setattr(args, dest, val)
    return args


# --------------------------------------------------------------- validation


def _need(args, *names):
    for n in names:
        if getattr(args, n.replace("-", "_"), None) is None:
            raise CLIError(f"missing required flag --{n}")


def _scalar(args, name, lo=None, hi=None, lo_open=False, hi_open=False) -> float:
    _need(args, name)
    raw = getattr(args, name.replace("-", "_"))
    try:
        vals = _floats(raw) if isinstance(raw, str) else [float(raw)]
    except ValueError:
        raise CLIError(f"--{name}: not a number: {raw!r}")
    if len(vals) != 1:
        raise CLIError(f"--{name}: expected a single value")
    v = vals[0]
    _range(name, v, lo, hi, lo_open, hi_open)
    return v


def _range(name, v, lo, hi, lo_open, hi_open):
    if lo is not None and (v < lo or (lo_open and v == lo)):
        raise CLIError(f"--{name} = {v} out of range (must be {'>' if lo_open else '>='} {lo})")
    if hi is not None and (v > hi or (hi_open and v == hi)):
        raise CLIError(f"--{name} = {v} out of range (must be {'<' if hi_open else '<='} {hi})")
    if v != v:
        raise CLIError(f"--{name} is NaN")


def _alpha(args):
    return _scalar(args, "alpha", -1, 1, True, True)


def _positive_int(args, name):
    _need(args, name)
    v = getattr(args, name.replace("-", "_"))
    if int(v) != v or v < 1:
        raise CLIError(f"--{name} = {v} must be a positive integer")
    return int(v)


def _series(args, name, T, lo=None, hi=None, lo_open=False, hi_open=False) -> list[float]:
    _need(args, name)
    raw = getattr(args, name)
    try:
        vals = _floats(raw) if isinstance(raw, str) else [float(raw)]
    except ValueError:
        raise CLIError(f"--{name}: not a number list: {raw!r}")
    if len(vals) == 1:
        vals = vals * T
    if len(vals) != T:
        raise CLIError(f"--{name}: got {len(vals)} values for --T {T}")
    for v in vals:
        _range(name, v, lo, hi, lo_open, hi_open)
    return vals


# ----------------------------------------------------------------- commands


def cmd_region(args) -> Table:
    T = _positive_int(args, "T")
    alphas = _series(args, "alpha", T, -1, 1, True, True)
    ws = _series(args, "w", T, 0, None, True)
    rates = _series(args, "rate", T, 0)
    sched = source.SourceSchedule(alphas, ws)
    S = source.power_trace(sched)
    tr = region.distortion_trace(sched, rates)
    rows = [(t + 1, S[t], tr.values[t]) for t in range(T)]
    return Table(["t", "S", "D"], rows, {"steady": tr.steady})


def cmd_steady(args) -> Table:
    alpha, w = _alpha(args), _scalar(args, "w", 0, lo_open=True)
    rate = _scalar(args, "rate", 0)
    if args.beta is not None:
        beta = _scalar(args, "beta", 0, 1)
        B = random_rate.rate_factor(random_rate.Erasure(beta, rate))
        return Table(["steady"], [(random_rate.steady_random(alpha, w, B),)], {"B": B})
    return Table(["steady"], [(region.steady_distortion(alpha, w, rate),)])


def _parse_support(text) -> random_rate.Discrete:
    pairs = []
    try:
        for item in str(text).split(","):
            r, p = item.split(":")
            pairs.append((float(r), float(p)))
    except ValueError:
        raise CLIError(f"--support: expected 'rate:prob,...', got {text!r}")
    try:
        return random_rate.Discrete(tuple(pairs))
    except ValidationError as exc:
        raise CLIError(f"--support: {exc}")


def cmd_random_rate(args) -> Table:
    T = _positive_int(args, "T")
    alpha, w = _alpha(args), _scalar(args, "w", 0, lo_open=True)
    _need(args, "support")
    pol = _parse_support(args.support)
    tr = random_rate.random_rate_trace(source.SourceSchedule.constant(alpha, w, T), pol)
    B = random_rate.rate_factor(pol)
    return Table(["t", "D"], [(t + 1, v) for t, v in enumerate(tr.values)], {"steady": tr.steady, "B": B})


def cmd_erasure(args) -> Table:
    T = _positive_int(args, "T")
    alpha, w = _alpha(args), _scalar(args, "w", 0, lo_open=True)
    rate, beta = _scalar(args, "rate", 0), _scalar(args, "beta", 0, 1)
    pol = random_rate.Erasure(beta, rate)
    tr = random_rate.random_rate_trace(source.SourceSchedule.constant(alpha, w, T), pol)
    return Table(["t", "D"], [(t + 1, v) for t, v in enumerate(tr.values)],
                 {"steady": tr.steady, "B": random_rate.rate_factor(pol)})


def cmd_packets(args) -> Table:
    rate = _scalar(args, "rate", 0)
    n_max = _positive_int(args, "max-n")
    if args.beta is not None:
        beta = _scalar(args, "beta", 0, 1)
        best, factors = random_rate.optimize_packets(rate, beta, n_max, args.objective)
        rows = [(n, f, n == best) for n, f in enumerate(factors, start=1)]
        return Table(["n", "factor", "optimal"], rows, {"best_n": best, "objective": args.objective})
    points = _positive_int(args, "points")
    rows = []
    for beta in np.linspace(0.0, 1.0, points):
        best, factors = random_rate.optimize_packets(rate, float(beta), n_max, args.objective)
        rows.append((float(beta), *factors, best))
    cols = ["beta", *(f"n{n}" for n in range(1, n_max + 1)), "best_n"]
    return Table(cols, rows, {"objective": args.objective})


def cmd_kaspi(args) -> Table:
    vals = [_scalar(args, n, 0, lo_open=True) for n in ("S", "Z", "d-minus", "d-plus")]
    try:
        pt = kaspi.KaspiPoint(*vals)
    except ValidationError as exc:
        raise CLIError(f"--Z: {exc}")
    case = kaspi.classify_case(pt)
    delta = kaspi.kaspi_delta(pt) if case is kaspi.KaspiCase.COUPLED else float("nan")
    return Table(["case", "delta", "rate"], [(case.value, delta, kaspi.kaspi_rate(pt))])


def cmd_invert(args) -> Table:
    S = _scalar(args, "S", 0, lo_open=True)
    Z = _scalar(args, "Z", 0, S, lo_open=True)
    rate, beta = _scalar(args, "rate", 0, lo_open=True), _scalar(args, "beta", 0, 1)
    sol = kaspi.invert_weighted(S, Z, rate, beta)
    return Table(
        ["d_minus", "d_plus", "weighted", "case", "achieved_rate", "method"],
        [(sol.d_minus, sol.d_plus, sol.weighted, sol.case_id.value, sol.achieved_rate, sol.method)],
    )


def cmd_delayed(args) -> Table:
    T = _positive_int(args, "T")
    alpha, w = _alpha(args), _scalar(args, "w", 0, lo_open=True)
    rate, beta = _scalar(args, "rate", 0, lo_open=True), _scalar(args, "beta", 0, 1)
    if args.method == "exact" and T > delayed.EXACT_MAX_T:
        raise CLIError(f"--T = {T} exceeds the exact-enumeration cap {delayed.EXACT_MAX_T}; use --mc")
    if args.method == "montecarlo":
        _positive_int(args, "samples")
        _positive_int(args, "shards")
    avg = delayed.average_trace(alpha, w, rate, beta, T, args.method, args.samples, args.seed,
                                args.shards, args.literal_alpha)
    if avg.standard_errors is None:
        return Table(["t", "D"], [(t + 1, v) for t, v in enumerate(avg.values)], {"method": avg.method})
    rows = [(t + 1, v, s) for t, (v, s) in enumerate(zip(avg.values, avg.standard_errors))]
    return Table(["t", "D", "stderr"], rows, {"method": avg.method, "samples": avg.samples, "seed": avg.seed})


def cmd_baselines(args) -> Table:
    T = _positive_int(args, "T")
    alpha, w = _alpha(args), _scalar(args, "w", 0, lo_open=True)
    rate, beta = _scalar(args, "rate", 0, lo_open=True), _scalar(args, "beta", 0, 1)
    inst = random_rate.random_rate_trace(source.SourceSchedule.constant(alpha, w, T), random_rate.Erasure(beta, rate))
    cols = {
        "instantaneous": inst.values,
        "no_prediction": delayed.baseline_no_prediction(alpha, w, rate, beta, T).values,
        "worst_case": delayed.baseline_worst_case(alpha, w, rate, beta, T).values,
        "best_case": delayed.baseline_best_case(alpha, w, rate, beta, T).values,
    }
    rows = [(t + 1, *(c[t] for c in cols.values())) for t in range(T)]
    return Table(["t", *cols], rows)


def _sim_config(args) -> mcsim.SimConfig:
    T = _positive_int(args, "T")
    alpha, w = _alpha(args), _scalar(args, "w", 0, lo_open=True)
    rate = _scalar(args, "rate", 0)
    samples = _positive_int(args, "samples")
    if samples < 2:
        raise CLIError("--samples must be at least 2")
    if args.packets is not None:
        pol = random_rate.MultiPacket(_scalar(args, "beta", 0, 1), rate, _positive_int(args, "packets"))
    elif args.beta is not None:
        pol = random_rate.Erasure(_scalar(args, "beta", 0, 1), rate)
    else:
        pol = random_rate.Deterministic(rate)
    feedback = args.feedback
    if args.scheme in ("worst-case", "best-case") and feedback == "instantaneous":
        feedback = "delayed"
    try:
        return mcsim.SimConfig(
            source.SourceSchedule.constant(alpha, w, T), pol, feedback, args.scheme,
            _positive_int(args, "frames"), samples, args.seed, _positive_int(args, "shards"),
            _positive_int(args, "workers"),
        )
    except ValidationError as exc:
        raise CLIError(f"--scheme/--feedback: {exc}")


def cmd_simulate(args):
    report = mcsim.simulate(_sim_config(args))
    summary = mcsim.compare(report, args.sigmas)
    print(
        f"{'PASS' if summary.passed else 'FAIL'} at {summary.tolerance_sigmas:g} sigma; "
        f"worst {summary.worst_sigma:.3f} sigma at t={summary.worst_t}",
        file=sys.stderr,
    )
    return report


def _read_csv(path) -> tuple[list[str], list[dict]]:
    try:
        with open(path, newline="") as fh:
            reader = csv.DictReader(fh)
            return list(reader.fieldnames or []), list(reader)
    except OSError as exc:
        raise CLIError(f"files: cannot read {path}: {exc}")


def cmd_compare(args) -> Table:
    if len(args.files) == 1:
        cols, rows = _read_csv(args.files[0])
        if not {"theory", "empirical", "stderr"} <= set(cols):
            raise CLIError("files: a single file must carry theory, empirical and stderr columns")
        with open(args.files[0]) as fh:
            report = mcsim.SimReport.from_csv(fh.read())
        s = mcsim.compare(report, args.sigmas)
        t = Table(["passed", "worst_sigma", "worst_t", "failing_t"],
                  [(s.passed, s.worst_sigma, s.worst_t, " ".join(map(str, s.failing_t)))])
        t.passed = s.passed
        return t
    if len(args.files) != 2:
        raise CLIError("files: give one simulate CSV or exactly two CSVs")
    (ca, ra), (cb, rb) = _read_csv(args.files[0]), _read_csv(args.files[1])
    if len(ra) != len(rb):
        raise CLIError(f"files: row counts differ ({len(ra)} vs {len(rb)})")
    out = []
    ok = True
    for col in [c for c in ca if c in cb]:
        try:
            a = np.array([float(r[col]) for r in ra])
            b = np.array([float(r[col]) for r in rb])
        except ValueError:
            same = all(x[col] == y[col] for x, y in zip(ra, rb))
            out.append((col, 0.0 if same else float("inf")))
            ok &= same
            continue
        diff = float(np.max(np.abs(a - b))) if a.size else 0.0
        out.append((col, diff))
        ok &= diff <= args.tol
    t = Table(["column", "max_abs_diff"], out, {"passed": ok})
    t.passed = ok
    return t


HANDLERS = {
    "region": cmd_region, "steady": cmd_steady, "random-rate": cmd_random_rate,
    "erasure": cmd_erasure, "packets": cmd_packets, "kaspi": cmd_kaspi,
    "invert": cmd_invert, "delayed": cmd_delayed, "baselines": cmd_baselines,
    "simulate": cmd_simulate, "compare": cmd_compare,
}


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = _apply_config(parser, argv)
        result = HANDLERS[args.command](args)
    except SystemExit as exc:  # argparse usage errors
        return int(exc.code or 0)
    except CLIError as exc:
        print(f"seqrd: error: {exc}", file=sys.stderr)
        return exc.code
    except (ValidationError, BudgetError) as exc:
        print(f"seqrd: error: invalid input: {exc}", file=sys.stderr)
        return 2
    except SolverError as exc:
        print(f"seqrd: solver failure: {exc}", file=sys.stderr)
        return 3

    if isinstance(result, mcsim.SimReport):
        text = result.to_json() if args.format == "json" else result.to_csv()
    else:
        text = result.json() if args.format == "json" else result.csv()
    if args.output:
        with open(args.output, "w") as fh:
            fh.write(text if text.endswith("\n") else text + "\n")
    else:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")
    return 0 if getattr(result, "passed", True) else 1


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()

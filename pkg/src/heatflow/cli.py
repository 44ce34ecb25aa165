"""heatflow command line.

    heatflow eval --t -0.1 --x 100 --y 2
    heatflow zeros --t 0 --a 0 --b 200
    heatflow count --t -0.1 --T 100,500
    heatflow flow --from -0.05 --to 0 --window 1:100 --tail classical
    heatflow energy --snapshots flow.jsonl --T 5
    heatflow gaps --range 1:100000 --lambda 0.77
    heatflow lehmer --half-width 10 --threshold 0.3
    heatflow calibrate --output constants.json

Options may also come from ``--config file`` holding ``key = value`` lines
(keys are option names; ``command = eval`` selects the subcommand).  Flags
on the command line win over the file.  Output goes to stdout or
``--output``; a one-line summary goes to stderr.  Failures print a JSON
error object to stderr and exit nonzero.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import _backend
from . import constants as _constants
from .errors import ConfigError, HeatflowError

COMMANDS = ("eval", "zeros", "count", "flow", "energy", "gaps", "lehmer", "calibrate")
FORMATS = ("json", "csv", "jsonl")
DEFAULT_FORMAT = {
    "eval": "json", "zeros": "csv", "count": "json", "flow": "jsonl", "energy": "json",
    "gaps": "json", "lehmer": "json", "calibrate": "json",
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def _index_range(text):
    try:
        a, b = text.split(":")
        lo, hi = int(a), int(b)
    except ValueError:
        raise ConfigError(f"expected an index range lo:hi, got {text!r}") from None
    if not 1 <= lo <= hi:
        raise ConfigError(f"index range must satisfy 1 <= lo <= hi, got {text!r}")
    return lo, hi


def _float_list(text):
    try:
        return [float(v) for v in str(text).split(",") if v.strip()]
    except ValueError:
        raise ConfigError(f"expected comma-separated numbers, got {text!r}") from None


def build_parser():
    common = _Parser(add_help=False)
    common.add_argument("--output", help="write output here instead of stdout")
    common.add_argument("--format", choices=FORMATS)
    common.add_argument("--constants", help="constants file (overrides $HEATFLOW_CONSTANTS)")
    common.add_argument("--threads", type=int, default=1)
    common.add_argument("--abs-tol", type=float)
    common.add_argument("--rel-tol", type=float)

    p = _Parser(prog="heatflow", description="Heat-flow deformation H_t of the Riemann xi function.")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)

    s = sub.add_parser("eval", parents=[common], help="evaluate H_t(x + iy)")
    s.add_argument("--t", type=float, required=True)
    s.add_argument("--x", type=float, required=True)
    s.add_argument("--y", type=float, default=0.0)
    s.add_argument("--method", default="auto", choices=("auto", "quadrature", "heat_kernel", "saddle", "xi"))

    s = sub.add_parser("zeros", parents=[common], help="real zeros of H_t on [a, b]")
    s.add_argument("--t", type=float, required=True)
    s.add_argument("--a", type=float, default=0.0)
    s.add_argument("--b", type=float, required=True)
    s.add_argument("--no-verify", action="store_true")

    s = sub.add_parser("count", parents=[common], help="argument-principle zero counts")
    s.add_argument("--t", type=float, required=True)
    s.add_argument("--T", required=True, help="height or comma-separated heights")

    s = sub.add_parser("flow", parents=[common], help="integrate the zero dynamics")
    s.add_argument("--from", dest="t0", type=float, required=True)
    s.add_argument("--to", dest="t1", type=float, required=True)
    s.add_argument("--window", type=_index_range, required=True)
    s.add_argument("--tail", default="classical", choices=("none", "classical", "mirror"))
    s.add_argument("--order", type=int, default=1)
    s.add_argument("--scheme", default="rk45", choices=("rk45", "rk4_adaptive"))
    s.add_argument("--snapshots", type=int, default=2, help="equally spaced snapshots including both ends")
    s.add_argument("--times", help="comma-separated snapshot times")
    s.add_argument("--input", help="CSV 'j,x' configuration at the start time")
    s.add_argument("--zeros", help="zero ordinate table (start time 0)")
    s.add_argument("--dt-init", type=float, default=1e-3)
    s.add_argument("--no-pad", action="store_true")

    s = sub.add_parser("energy", parents=[common], help="renormalized energies")
    s.add_argument("--T", type=float, required=True)
    s.add_argument("--snapshots", help="JSONL snapshot stream from 'flow'")
    s.add_argument("--zeros", help="zero ordinate table (t = 0)")
    s.add_argument("--window", type=_index_range)
    s.add_argument("--no-strict", action="store_true")

    s = sub.add_parser("gaps", parents=[common], help="normalized gap statistics")
    s.add_argument("--zeros", help="zero ordinate table (default: packaged)")
    s.add_argument("--range", type=_index_range)
    s.add_argument("--lambda", dest="lambdas", help="extra comma-separated thresholds")

    s = sub.add_parser("lehmer", parents=[common], help="scan for close zero pairs")
    s.add_argument("--zeros", help="zero ordinate table (default: packaged)")
    s.add_argument("--half-width", type=int, default=10)
    s.add_argument("--threshold", type=float, default=0.3)

    s = sub.add_parser("calibrate", parents=[common], help="fit C' and envelope constants")
    s.add_argument("--quick", action="store_true", help="skip the t < 0 counting envelope")
    return p


# ---------------------------------------------------------------------------
# config files


def read_config(path):
    """``key = value`` lines; '#' starts a comment."""
    out = {}
    for n, line in enumerate(Path(path).read_text().splitlines(), start=1):
        s = line.split("#", 1)[0].strip()
        if not s:
            continue
        if "=" not in s:
            raise ConfigError(f"config line {n} is not key = value", line=n)
        k, v = (p.strip() for p in s.split("=", 1))
        out[k.replace("_", "-")] = v
    return out


def _expand_config(argv, parser):
    """Turn --config file entries into flags placed before the user's own."""
    argv = list(argv)
    if "--config" not in argv:
        return argv
    i = argv.index("--config")
    if i + 1 >= len(argv):
        raise ConfigError("--config needs a path")
    cfg = read_config(argv[i + 1])
    del argv[i:i + 2]
    command = cfg.pop("command", None)
    if argv and argv[0] in COMMANDS:
        command, rest = argv[0], argv[1:]
    else:
        rest = argv
    if command is None:
        raise ConfigError("no command given on the command line or in the config file")
    if command not in COMMANDS:
        raise ConfigError(f"unknown command {command!r}")
    sub = parser._subparsers._group_actions[0].choices[command]
    flags = {}
    for a in sub._actions:
        for o in a.option_strings:
            flags[o] = a
    tokens = []
    for k, v in cfg.items():
        opt = "--" + k
        if opt not in flags:
            raise ConfigError(f"unknown config key {k!r} for {command}")
        if isinstance(flags[opt], argparse._StoreTrueAction):
            if v.lower() in ("1", "true", "yes", "on"):
                tokens.append(opt)
        else:
            tokens.extend([opt, v])
    return [command] + tokens + rest


# ---------------------------------------------------------------------------
# output


def _json(obj):
    return json.dumps(obj, sort_keys=True) + "\n"


def _csv(header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([repr(v) if isinstance(v, float) else v for v in r])
    return buf.getvalue()


def _jsonl(objs):
    return "".join(json.dumps(o, sort_keys=True) + "\n" for o in objs)


def _policy(args):
    from .special import DEFAULT_POLICY, PrecisionPolicy

    kw = {}
    if args.abs_tol is not None:
        kw["abs_tol"] = args.abs_tol
    if args.rel_tol is not None:
        kw["rel_tol"] = args.rel_tol
    return PrecisionPolicy(**{**asdict(DEFAULT_POLICY), **kw}) if kw else DEFAULT_POLICY


def _table(path):
    from .zeros import load_zero_table

    return load_zero_table(path)


# ---------------------------------------------------------------------------
# commands


def cmd_eval(args, consts, policy):
    from .ht import HtQuery, evaluate

    r = evaluate(HtQuery(complex(args.x, args.y), args.t, args.method, policy), consts)
    row = {"re": r.value.real, "im": r.value.imag, "method_used": r.method_used,
           "est_error": r.est_error, "log_abs": r.log_abs}
    summary = f"eval: H_{args.t:g}({args.x:g}{args.y:+g}i) via {r.method_used}, log|H| = {r.log_abs:.6g}"
    if args.format == "csv":
        keys = ["re", "im", "method_used", "est_error", "log_abs"]
        return _csv(keys, [[row[k] for k in keys]]), summary
    if args.format == "jsonl":
        return _jsonl([row]), summary
    return _json(row), summary


def cmd_zeros(args, consts, policy):
    from .zeros import find_zeros

    cfg = find_zeros(args.t, args.a, args.b, policy, verify=not args.no_verify, consts=consts)
    summary = f"zeros: {len(cfg)} real zeros of H_{args.t:g} in [{args.a:g}, {args.b:g}]"
    rows = [[int(j), float(x)] for j, x in zip(cfg.indices, cfg.x)]
    if args.format == "json":
        return _json({"t": args.t, "window": list(cfg.window), "x": [r[1] for r in rows]}), summary
    if args.format == "jsonl":
        return _jsonl({"j": j, "x": x} for j, x in rows), summary
    return cfg.to_csv(), summary


def _count_row(r):
    return {"T": r.T, "t": r.t, "N": r.N, "psi_T": r.psi_T, "residual": r.residual,
            "winding": r.winding, "error": r.error}


def cmd_count(args, consts, policy):
    from .zeros import count_zeros, rvm_profile

    Ts = _float_list(args.T)
    if not Ts:
        raise ConfigError("--T needs at least one height")
    if len(Ts) == 1:
        rows = [_count_row(count_zeros(args.t, Ts[0], policy, consts))]
    else:
        rows = [_count_row(r) for r in rvm_profile(args.t, Ts, policy, consts)]
    summary = "count: " + ", ".join(f"N({r['T']:g}) = {r['N']}" for r in rows)
    if args.format == "csv":
        keys = ["T", "t", "N", "psi_T", "residual", "winding"]
        return _csv(keys, [[r[k] for k in keys] for r in rows]), summary
    if args.format == "jsonl":
        return _jsonl(rows), summary
    return _json(rows[0] if len(rows) == 1 else {"reports": rows}), summary


def _initial_config(args, lo, hi, policy, consts):
    from .special import classical_location
    from .zeros import config_from_csv, find_zeros

    if args.input:
        cfg = config_from_csv(Path(args.input).read_text(), args.t0)
    elif args.t0 == 0:
        cfg = _table(args.zeros).configuration(1, hi)
    else:
        b = classical_location(hi + 1) + 10.0
        for _ in range(8):
            cfg = find_zeros(args.t0, 0.0, b, policy, consts=consts)
            if cfg.window[1] >= hi:
                break
            b *= 1.1
    if not (cfg.window[0] <= lo and cfg.window[1] >= hi):
        raise ConfigError("initial configuration does not cover the (padded) window",
                          have=list(cfg.window), need=[lo, hi])
    return cfg.sub(lo, hi).replace(t=args.t0)


def cmd_flow(args, consts, policy):
    from .dynamics import FlowControls, FlowSnapshot, TailModel, diagnostics, flow, padded_window, snapshot_record

    lo, hi = args.window
    tail = TailModel(args.tail, args.order)
    if args.tail == "classical" and not args.no_pad:
        (plo, phi), _ = padded_window(lo, hi)
    else:
        plo, phi = lo, hi
    cfg = _initial_config(args, plo, phi, policy, consts)
    if args.times:
        times = _float_list(args.times)
    else:
        n = max(args.snapshots, 2)
        times = list(np.linspace(args.t0, args.t1, n))
    controls = FlowControls(dt_init=args.dt_init, t_end=max(0.0, args.t0, args.t1), scheme=args.scheme)
    snaps = flow(cfg, args.t0, args.t1, tail, controls, times, policy)
    out = []
    for s in snaps:
        c = s.config.sub(lo, hi) if (plo, phi) != (lo, hi) else s.config
        out.append(FlowSnapshot(s.t, c, diagnostics(c, tail, policy), s.step_stats))
    summary = f"flow: {len(out)} snapshots of j = {lo}..{hi} from t = {args.t0:g} to {args.t1:g}"
    recs = [snapshot_record(s) for s in out]
    if args.format == "json":
        return _json({"snapshots": recs}), summary
    if args.format == "csv":
        rows = [[s.t, int(j), float(x)] for s in out for j, x in zip(s.config.indices, s.config.x)]
        return _csv(["t", "j", "x"], rows), summary
    return _jsonl(recs), summary


def cmd_energy(args, consts, policy):
    from .dynamics import read_snapshots
    from .energy import dorium_check, energy_report, weighted_sums

    if args.snapshots:
        snaps = read_snapshots(Path(args.snapshots).read_text())
        configs = [(s.t, s.config) for s in snaps]
    else:
        lo, hi = args.window or (1, 1000)
        configs = [(0.0, _table(args.zeros).configuration(lo, hi))]
    if not configs:
        raise ConfigError("no snapshots to evaluate")
    reports = []
    for t, c in configs:
        ws = weighted_sums(c, None, args.T, policy, strict=not args.no_strict)
        r = energy_report(ws, consts)
        r["t"] = t
        reports.append(r)
    summary = f"energy: {len(reports)} report(s) at T = {args.T:g}, last E~_T = {reports[-1]['E_tilde_T']:.6g}"
    if args.format == "jsonl":
        return _jsonl(reports), summary
    if args.format == "csv":
        keys = ["t", "T", "E_tilde_T", "H_tilde_T", "H_renorm_T", "tail_bound"]
        return _csv(keys, [[r[k] for k in keys] for r in reports]), summary
    if len(reports) == 1:
        return _json(reports[0]), summary
    out = {"reports": reports}
    if len(reports) >= 3:
        out["dorium"] = dorium_check(snaps, None, args.T, policy=policy)
    return _json(out), summary


def cmd_gaps(args, consts, policy):
    from .stats import LAMBDAS, gap_report

    tab = _table(args.zeros)
    rng = args.range or (1, tab.count)
    lams = sorted(set(LAMBDAS) | set(_float_list(args.lambdas or "")))
    r = gap_report(tab, None, rng, lams, policy)
    fb = r.summary()["fraction_below"]
    summary = f"gaps: {len(r.gaps)} gaps, mean normalized gap {r.mean:.6f}, fraction below 0.77 = {fb['0.77']}"
    if args.format == "csv":
        return r.to_csv(), summary
    return r.to_json() + "\n", summary


def cmd_lehmer(args, consts, policy):
    from .stats import lehmer_scan

    cands = lehmer_scan(_table(args.zeros), args.half_width, args.threshold)
    rows = [asdict(c) for c in cands]
    summary = f"lehmer: {len(rows)} candidates below quality {args.threshold:g}"
    if args.format == "csv":
        keys = ["j", "x", "gap", "local_mean_gap", "quality"]
        return _csv(keys, [[r[k] for k in keys] for r in rows]), summary
    if args.format == "jsonl":
        return _jsonl(rows), summary
    return _json({"count": len(rows), "candidates": rows}), summary


def cmd_calibrate(args, consts, policy):
    from .calibration import calibrate

    c = calibrate(quick=args.quick, log=lambda m: print(f"calibrate: {m}", file=sys.stderr))
    return c.to_json(), f"calibrate: C' = {c.C_prime:g}, sha256 {c.sha256}"


HANDLERS = {
    "eval": cmd_eval, "zeros": cmd_zeros, "count": cmd_count, "flow": cmd_flow, "energy": cmd_energy,
    "gaps": cmd_gaps, "lehmer": cmd_lehmer, "calibrate": cmd_calibrate,
}


def run(argv):
    """Parse, execute and write output; returns the exit status."""
    parser = build_parser()
    args = parser.parse_args(_expand_config(argv, parser))
    if args.command is None:
        raise ConfigError("no command given", commands=list(COMMANDS))
    if args.threads < 1:
        raise ConfigError("--threads must be >= 1")
    _backend.set_threads(args.threads)
    args.format = args.format or DEFAULT_FORMAT[args.command]
    consts = _constants.load(args.constants)
    text, summary = HANDLERS[args.command](args, consts, _policy(args))
    if args.output:
        Path(args.output).write_text(text)
    else:
        sys.stdout.write(text)
    print(summary, file=sys.stderr)
    return 0


def _error_exit(err: dict, status: int) -> int:
    print(json.dumps({"error": err}, sort_keys=True), file=sys.stderr)
    return status


def main(argv=None):
    argv = sys.argv[1:] if argv is None else list(argv)
    op = next((a for a in argv if a in COMMANDS), None)
    try:
        return run(argv)
    except ConfigError as exc:
        return _error_exit({**exc.to_dict(), "operation": op}, 2)
    except HeatflowError as exc:
        return _error_exit({**exc.to_dict(), "operation": op}, 1)
    except OSError as exc:
        return _error_exit({"code": "io_error", "module": "cli", "message": str(exc), "operation": op}, 2)
    except Exception as exc:  # last resort: still a structured error
        return _error_exit({"code": "internal_error", "module": "cli", "message": f"{type(exc).__name__}: {exc}",
                            "operation": op}, 3)


if __name__ == "__main__":
    sys.exit(main())

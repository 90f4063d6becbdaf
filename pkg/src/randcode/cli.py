"""Command-line interface: ``randcode <command> [flags]``.

Every command writes CSV (default) or JSON to stdout or ``--out-path``; with
``--figure PATH`` it also renders a matplotlib figure (``plot`` extra).
Parameters resolve as command defaults, then ``--config`` file, then flags.

Exit codes: 0 success, 2 configuration error, 3 compute-budget violation,
1 any other failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
import time

import numpy as np

from . import analytics, optimizer, protocol
from .channel import ChannelError, derive_channel, derive_operating_point
from .config import ConfigError, load_config, parse_q
from .decoder import NO_PRUNING, PruneSchedule

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_CONFIG = 2
EXIT_BUDGET = 3

TABLE2_DEFAULTS = dict(T=optimizer.TABLE2_T, xi=optimizer.TABLE2_XI)
DESK_DEFAULTS = dict(T=1e-2, xi=0.0, sigma_x2=0.095, q=32, gamma=-0.45, delta=-0.78, N=2000, b=8, seed=0)
PULSE_RATE = 1e6
BENCH_BUDGET_MAC_PER_PULSE = 2.1e4

DEFAULTS = {
    "optimize": dict(TABLE2_DEFAULTS, q=1024),
    "table2": dict(TABLE2_DEFAULTS),
    "simulate": dict(DESK_DEFAULTS),
    "score-dist": dict(DESK_DEFAULTS, sigma_x2=0.21, q=1024, gamma=-0.28, delta=-0.50, N=1000),
    "leakage-curve": dict(TABLE2_DEFAULTS, q=2 ** 15),
    "landscape": dict(TABLE2_DEFAULTS, q=1024, sigma_x2=0.21),
    "bench": dict(T=0.1, xi=0.0, sigma_x2=0.306, q=2 ** 15, gamma=-0.211, delta=-0.383, N=4, b=8, seed=0),
}


class UsageError(Exception):
    pass


def _range(text):
    try:
        lo, hi = (float(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected 'lo,hi', got {text!r}") from None
    return lo, hi


def _log2q_list(text):
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _q(text):
    try:
        return parse_q(text)
    except ConfigError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    g = common.add_argument_group("common")
    g.add_argument("--T", type=float, help="channel transmittance")
    g.add_argument("--xi", type=float, help="excess noise (shot-noise units)")
    g.add_argument("--q", type=_q, help="codebook size, e.g. 1024 or 2^10")
    g.add_argument("--gamma", type=float)
    g.add_argument("--delta", type=float)
    g.add_argument("--sigma-x2", dest="sigma_x2", type=float, help="modulation variance")
    g.add_argument("--N", type=int, help="number of blocks")
    g.add_argument("--b", type=int, help="bit depth of the discretized table")
    g.add_argument("--seed", type=int)
    g.add_argument("--out-path", help="write output here instead of stdout")
    g.add_argument("--format", choices=("csv", "json"), default="csv")
    g.add_argument("--config", help="key = value file; flags override it")
    g.add_argument("--figure", help="also render a figure to this path (needs matplotlib)")

    p = argparse.ArgumentParser(prog="randcode", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("optimize", parents=[common], help="maximize SKR over (sigma_x2, gamma, delta)")
    s.add_argument("--trace", action="store_true", help="include every evaluated point (json)")

    s = sub.add_parser("table2", parents=[common], help="optimum for several codebook sizes")
    s.add_argument("--log2q-list", type=_log2q_list, default=list(optimizer.TABLE2_LOG2Q))

    s = sub.add_parser("simulate", parents=[common], help="Monte-Carlo session with key ledger")
    s.add_argument("--variant", choices=protocol.VARIANTS, default="true-random")
    s.add_argument("--model", choices=protocol.MODELS, default="vector")
    s.add_argument("--expander", choices=("philox", "blake2b"), default="philox")
    s.add_argument("--prune", action="store_true", help="enable the default pruning schedule")
    s.add_argument("--workers", type=int, default=1)
    s.add_argument("--budget", type=float, default=protocol.DEFAULT_COMPUTE_BUDGET)
    s.add_argument("--records", help="write per-block records as JSON lines here")

    s = sub.add_parser("score-dist", parents=[common], help="true and fake score histograms")
    s.add_argument("--bins", type=int, default=60)
    s.add_argument("--fakes-per-block", type=int, default=64)

    s = sub.add_parser("leakage-curve", parents=[common], help="information vs sigma_x2 or key rate vs distance")
    s.add_argument("--mode", choices=("sigma", "distance"), default="sigma")
    s.add_argument("--range", dest="sweep", type=_range, help="sweep bounds 'lo,hi'")
    s.add_argument("--points", type=int, default=41)
    s.add_argument("--pulse-rate", type=float, default=PULSE_RATE)

    s = sub.add_parser("landscape", parents=[common], help="SKR/DW over a (gamma, delta) grid")
    s.add_argument("--gamma-range", type=_range, default=(-0.5, -0.1))
    s.add_argument("--delta-range", type=_range, default=(-1.0, 0.0))
    s.add_argument("--resolution", type=int, default=101)

    s = sub.add_parser("bench", parents=[common], help="decoder throughput report (JSON lines)")
    s.add_argument("--variant", choices=protocol.VARIANTS, default="pseudorandom")
    s.add_argument("--prune", action="store_true")
    return p


def _resolve(args) -> dict:
    vals = dict(DEFAULTS[args.command])
    if args.config:
        vals.update(load_config(args.config))
    for key in ("T", "xi", "q", "gamma", "delta", "sigma_x2", "N", "b", "seed"):
        v = getattr(args, key)
        if v is not None:
            vals[key] = v
    return vals


def _need(vals, *keys):
    missing = [k for k in keys if k not in vals]
    if missing:
        raise UsageError(f"missing parameter(s): {', '.join('--' + k.replace('_', '-') for k in missing)}")
    return [vals[k] for k in keys]


def _num(v):
    if isinstance(v, (bool, np.bool_)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return v


def _csv(rows, columns) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_num(r[c]) for c in columns])
    return buf.getvalue()


def _json(obj) -> str:
    return json.dumps(obj, indent=2, default=float) + "\n"


def _emit(text: str, out_path):
    if out_path:
        with open(out_path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _plotting():
    try:
        from . import plotting
    except ImportError:
        raise UsageError("--figure needs matplotlib; install the 'plot' extra") from None
    return plotting


# -- commands --------------------------------------------------------------------


def cmd_optimize(args, vals):
    T, xi, q = _need(vals, "T", "xi", "q")
    res = optimizer.optimize_skr(T, xi, q)
    if args.figure:
        land = optimizer.landscape_slice(T, xi, q, res.sigma_x2)
        _plotting().landscape_figure(land, args.figure, marker=(res.gamma, res.delta))
    if args.format == "json":
        return res.to_json(with_trace=args.trace) + "\n"
    row = {k: v for k, v in res.__dict__.items() if k not in ("trace", "boundary_hits")}
    row["boundary_hits"] = ";".join(res.boundary_hits)
    return _csv([row], list(row))


def cmd_table2(args, vals):
    T, xi = _need(vals, "T", "xi")
    rows = optimizer.table2(args.log2q_list, T, xi)
    if args.figure:
        _plotting().table2_figure(rows, args.figure)
    if args.format == "json":
        return _json(rows)
    return _csv(rows, optimizer.TABLE2_COLUMNS)


def _session_config(args, vals, variant, schedule, N=None, record=False, workers=1, budget=None):
    T, xi, sx2, q, gamma, delta = _need(vals, "T", "xi", "sigma_x2", "q", "gamma", "delta")
    params = derive_channel(T, xi, sx2)
    op = derive_operating_point(params, q, gamma, delta)
    return protocol.SessionConfig(
        params, op, N if N is not None else vals["N"], seed=vals.get("seed", 0), variant=variant,
        b=vals.get("b", 8), expander=getattr(args, "expander", "philox"), model=getattr(args, "model", "vector"),
        schedule=schedule, compute_budget=budget or protocol.DEFAULT_COMPUTE_BUDGET,
        workers=workers, record_blocks=record,
    )


def cmd_simulate(args, vals):
    cfg = _session_config(args, vals, args.variant, PruneSchedule() if args.prune else NO_PRUNING,
                          record=bool(args.records), workers=args.workers, budget=args.budget)
    res = protocol.run_session(cfg)
    if args.records:
        with open(args.records, "w", encoding="utf-8") as fh:
            fh.write(res.records_jsonl())
    if args.figure:
        _plotting().acceptance_figure(res.alpha, args.figure)
    if args.format == "json":
        return res.to_json() + "\n"
    row = {k: v for k, v in res.as_dict().items() if k not in ("ledger", "alpha")}
    row.update({f"ledger_{k}": v for k, v in res.ledger.as_dict().items()})
    return _csv([row], list(row))


def score_histogram(true_scores, fake_scores, bins, theta):
    both = np.concatenate([true_scores, fake_scores])
    out = {"theta": theta, "true_mean": math.nan, "fake_mean": math.nan, "mode_gap": math.nan,
           "edges": [], "fake_density": [], "true_density": []}
    if both.size == 0:
        return out
    edges = np.linspace(both.min(), both.max(), bins + 1)
    fd = np.histogram(fake_scores, edges, density=True)[0] if fake_scores.size else np.zeros(bins)
    td = np.histogram(true_scores, edges, density=True)[0] if true_scores.size else np.zeros(bins)
    tm = float(true_scores.mean()) if true_scores.size else math.nan
    fm = float(fake_scores.mean()) if fake_scores.size else math.nan
    out.update(true_mean=tm, fake_mean=fm, mode_gap=tm - fm, edges=edges.tolist(),
               fake_density=fd.tolist(), true_density=td.tolist())
    return out


def cmd_score_dist(args, vals):
    T, xi, sx2, q, gamma, delta, N = _need(vals, "T", "xi", "sigma_x2", "q", "gamma", "delta", "N")
    if N < 0:
        raise UsageError("--N must be >= 0")
    params = derive_channel(T, xi, sx2)
    op = derive_operating_point(params, q, gamma, delta)
    t, f = protocol.score_samples(params, op, N, vals.get("seed", 0), args.fakes_per_block)
    hist = score_histogram(t, f, args.bins, op.theta)
    hist["predicted_gap"] = math.sqrt(2.0 * math.log(q) / (1.0 + gamma))
    if args.figure:
        _plotting().score_dist_figure(hist, args.figure)
    if args.format == "json":
        return _json(hist)
    e = hist["edges"]
    rows = [{"bin_left": e[i], "bin_right": e[i + 1], "fake_density": hist["fake_density"][i],
             "true_density": hist["true_density"][i]} for i in range(len(e) - 1)]
    print(f"true_mean={hist['true_mean']:.4f} fake_mean={hist['fake_mean']:.4f} "
          f"mode_gap={hist['mode_gap']:.4f} predicted={hist['predicted_gap']:.4f}", file=sys.stderr)
    return _csv(rows, ["bin_left", "bin_right", "fake_density", "true_density"])


def km_to_T(km):
    """Fiber transmittance at 0.2 dB/km."""
    return 10.0 ** (-0.02 * np.asarray(km, dtype=np.float64))


def leakage_sigma_rows(T, xi, sigma_x2):
    rows = []
    for s in sigma_x2:
        p = derive_channel(T, xi, float(s))
        ixy = analytics.mutual_info_xy(p)
        iey = analytics.leakage_ey(p)
        rows.append({"sigma_x2": float(s), "ixy_over_T": ixy / T, "iey_over_T": iey / T, "ratio": iey / ixy,
                     "delta_i_over_dw": (ixy - iey) / analytics.devetak_winter(T)})
    return rows


def key_rate_rows(xi, q, km, pulse_rate=PULSE_RATE):
    rows = []
    for d in km:
        T = float(km_to_T(d))
        res = optimizer.optimize_skr(T, xi, q)
        dw = analytics.devetak_winter(T)
        rows.append({"km": float(d), "T": T, "sigma_x2": res.sigma_x2, "gamma": res.gamma, "delta": res.delta,
                     "skr_over_dw": res.skr_over_dw, "key_bits_per_s": res.skr * pulse_rate,
                     "dw_bits_per_s": dw * pulse_rate})
    return rows


def cmd_leakage_curve(args, vals):
    if args.points < 1:
        raise UsageError("--points must be >= 1")
    if args.mode == "sigma":
        T, xi = _need(vals, "T", "xi")
        lo, hi = args.sweep or (0.01, 100.0)
        rows = leakage_sigma_rows(T, xi, np.geomspace(lo, hi, args.points))
        cols = ["sigma_x2", "ixy_over_T", "iey_over_T", "ratio", "delta_i_over_dw"]
    else:
        xi, q = _need(vals, "xi", "q")
        lo, hi = args.sweep or (0.0, 300.0)
        rows = key_rate_rows(xi, q, np.linspace(lo, hi, args.points), args.pulse_rate)
        cols = ["km", "T", "sigma_x2", "gamma", "delta", "skr_over_dw", "key_bits_per_s", "dw_bits_per_s"]
    if args.figure:
        _plotting().leakage_figure(rows, args.mode, args.figure)
    if args.format == "json":
        return _json(rows)
    return _csv(rows, cols)


def cmd_landscape(args, vals):
    T, xi, q, sx2 = _need(vals, "T", "xi", "q", "sigma_x2")
    if args.resolution < 1:
        raise UsageError("--resolution must be positive")
    land = optimizer.landscape_slice(T, xi, q, sx2, args.gamma_range, args.delta_range, args.resolution)
    if args.figure:
        _plotting().landscape_figure(land, args.figure)
    if args.format == "json":
        return _json(land.as_dict())
    return land.to_csv()


def bench_report(cfg: protocol.SessionConfig, wall_time: float, res: protocol.SessionResult) -> dict:
    pulses = cfg.N * cfg.op.n
    mac_per_pulse = res.mac_count / pulses
    return {
        "q": cfg.op.q, "n": cfg.op.n, "b": cfg.b, "variant": cfg.variant, "blocks": cfg.N,
        "wall_time": wall_time, "mul_accumulate_count": res.mac_count, "rows_pruned": res.rows_pruned,
        "P_acc_empirical": res.p_acc, "SER_empirical": res.ser,
        "mac_per_pulse": mac_per_pulse, "budget_mac_per_pulse": BENCH_BUDGET_MAC_PER_PULSE,
        "budget_ratio": mac_per_pulse / BENCH_BUDGET_MAC_PER_PULSE,
    }


def cmd_bench(args, vals):
    cfg = _session_config(args, vals, args.variant, PruneSchedule() if args.prune else NO_PRUNING)
    t0 = time.perf_counter()
    res = protocol.run_session(cfg)
    rec = bench_report(cfg, time.perf_counter() - t0, res)
    if args.figure:
        print("bench has no figure; --figure ignored", file=sys.stderr)
    if args.format == "json":
        return json.dumps(rec) + "\n"
    return _csv([rec], list(rec))


COMMANDS = {
    "optimize": cmd_optimize,
    "table2": cmd_table2,
    "simulate": cmd_simulate,
    "score-dist": cmd_score_dist,
    "leakage-curve": cmd_leakage_curve,
    "landscape": cmd_landscape,
    "bench": cmd_bench,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        vals = _resolve(args)
        text = COMMANDS[args.command](args, vals)
        _emit(text, args.out_path)
    except protocol.ComputeBudgetError as exc:
        print(f"randcode: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except (ConfigError, ChannelError, UsageError, ValueError) as exc:
        print(f"randcode: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # noqa: BLE001
        print(f"randcode: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FAILURE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())

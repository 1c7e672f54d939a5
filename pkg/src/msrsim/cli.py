"""Command-line harness: single runs, Monte Carlo sweeps, graph checks.

Every invocation writes one output directory containing the fully
resolved config (so any result is regenerable from its own metadata)
plus plot-ready CSVs. Verdicts are data, not errors: the exit status is
0 whenever the run completed, 1 on config problems, 2 on I/O problems.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from dataclasses import replace
from multiprocessing import Pool
from pathlib import Path

from msrsim import metrics
from msrsim.engine import RunRecord
from msrsim.graph import (
    CapacityError,
    check_robustness,
    is_connected,
    min_in_degree,
    write_adjacency_csv,
)
from msrsim.metrics import ConsensusOutcome, build_verdict, check_consensus
from msrsim.scenario import (
    ConfigError,
    GeometricGraphSpec,
    ScenarioConfig,
    config_from_file,
    resolve,
    resolved_dict,
    simulate,
    sweep_points,
)

from msrsim import engine


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _write_csv(path: Path, header: list[str], rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


def _write_config(out: Path, cfg: ScenarioConfig) -> None:
    with open(out / "config.resolved", "w") as fh:
        json.dump(resolved_dict(cfg), fh, indent=2, sort_keys=True)
        fh.write("\n")


# -- single-scenario runs -------------------------------------------------------


def run_scenario(cfg: ScenarioConfig, out: Path) -> list[RunRecord]:
    """Execute one run per trial and write the artifact files."""
    out.mkdir(parents=True, exist_ok=True)
    records = [simulate(cfg, trial) for trial in range(cfg.trials)]
    _write_config(out, cfg)

    _write_csv(
        out / "trajectories.csv",
        ["trial", "agent", "t_start", "x_start", "u"],
        (
            (trial, agent, t, x, u)
            for trial, rec in enumerate(records)
            for agent in rec.regular
            for (t, x, u) in rec.segments[agent]
        ),
    )
    _write_csv(
        out / "events.csv",
        ["trial", "time", "kind", "agent", "from", "to", "value"],
        (
            (trial, e.time, e.kind, e.agent, e.frm, e.to, e.value)
            for trial, rec in enumerate(records)
            for e in rec.events
        ),
    )
    _write_csv(
        out / "counters.csv",
        ["trial", "agent", "updates", "transmissions"],
        (
            (trial, agent, rec.counters[agent].updates, rec.counters[agent].transmissions)
            for trial, rec in enumerate(records)
            for agent in sorted(rec.counters)
        ),
    )
    verdict_rows = []
    lines = []
    for trial, rec in enumerate(records):
        v = build_verdict(rec, cfg.c)
        outcome = check_consensus(rec, c=cfg.c)
        verdict_rows.append(
            (
                trial,
                v.safety_holds,
                v.safety_interval[0],
                v.safety_interval[1],
                v.final_spread,
                v.quiesced,
                v.consensus_at_c,
                outcome.value,
            )
        )
        lines.append(
            f"trial {trial}: safety={v.safety_holds} quiesced={v.quiesced} "
            f"final_spread={v.final_spread:.6g} consensus_at_c={outcome.value}"
        )
    _write_csv(
        out / "verdicts.csv",
        [
            "trial",
            "safety_holds",
            "interval_lo",
            "interval_hi",
            "final_spread",
            "quiesced",
            "consensus_at_c",
            "outcome",
        ],
        verdict_rows,
    )
    mean_u, mean_t = metrics.aggregate_counters(records)
    with open(out / "summary.txt", "w") as fh:
        fh.write(f"protocol: {cfg.protocol.value}\n")
        fh.write(f"trials: {cfg.trials}  horizon: {cfg.horizon}  epsilon: {cfg.epsilon}  F: {cfg.f}  c: {cfg.c}\n")
        fh.write("\n".join(lines))
        fh.write(
            f"\nmean per regular agent: updates={mean_u:.6g} transmissions={mean_t:.6g}\n"
        )
    return records


# -- sweeps ----------------------------------------------------------------------


def _run_cell(job) -> dict:
    point, trial = job
    sc = resolve(point["config"], trial, stream_key=point["stream_key"])
    rec = engine.run(sc)
    reg = rec.regular
    return {
        "protocol": point["protocol"].value,
        "n_adversaries": point["n_adversaries"],
        "radius": point["radius"],
        "trial": trial,
        "outcome": check_consensus(rec, c=point["config"].c).value,
        "safety": metrics.check_safety(rec),
        "quiesced": rec.quiesced,
        "final_spread": metrics.final_spread(rec),
        "connected": is_connected(sc.graph),
        "sum_updates": sum(rec.counters[i].updates for i in reg),
        "sum_transmissions": sum(rec.counters[i].transmissions for i in reg),
        "n_regular": len(reg),
    }


def run_sweep(cfg: ScenarioConfig, out: Path, jobs: int = 1) -> list[dict]:
    """Run every sweep point for the configured trial count.

    Trials parallelize over a worker pool; per-trial rng streams derive
    from (seed, point, trial), so results do not depend on the degree of
    parallelism.
    """
    out.mkdir(parents=True, exist_ok=True)
    points = sweep_points(cfg)
    jobs_list = [(p, t) for p in points for t in range(cfg.trials)]
    if jobs > 1:
        with Pool(processes=jobs) as pool:
            rows = pool.map(_run_cell, jobs_list, chunksize=4)
    else:
        rows = [_run_cell(j) for j in jobs_list]
    rows.sort(key=lambda r: (r["protocol"], r["n_adversaries"], r["radius"] or 0.0, r["trial"]))

    _write_config(out, cfg)

    groups: dict[tuple, list[dict]] = {}
    for r in rows:
        groups.setdefault((r["protocol"], r["n_adversaries"], r["radius"]), []).append(r)

    rate_rows = []
    agg_rows = []
    for (proto, n_adv, radius), cell in sorted(
        groups.items(), key=lambda kv: (kv[0][0], kv[0][1], kv[0][2] or 0.0)
    ):
        trials = len(cell)
        wins = sum(1 for r in cell if r["outcome"] == ConsensusOutcome.ACHIEVED.value)
        conn = sum(1 for r in cell if r["connected"])
        agents = sum(r["n_regular"] for r in cell)
        rate_rows.append(
            (proto, n_adv, radius, trials, wins, wins / trials, conn / trials)
        )
        agg_rows.append(
            (
                proto,
                n_adv,
                radius,
                sum(r["sum_updates"] for r in cell) / agents,
                sum(r["sum_transmissions"] for r in cell) / agents,
            )
        )

    _write_csv(
        out / "success_rates.csv",
        ["protocol", "n_adversaries", "radius", "trials", "successes", "rate", "connectivity_rate"],
        rate_rows,
    )
    _write_csv(
        out / "counter_aggregates.csv",
        ["protocol", "n_adversaries", "radius", "mean_updates", "mean_transmissions"],
        agg_rows,
    )

    with open(out / "summary.txt", "w") as fh:
        fh.write(f"sweep over {len(points)} points x {cfg.trials} trials\n\n")
        protos = sorted({r[0] for r in agg_rows})
        fh.write("updates/transmissions per regular agent (rows: n_adversaries)\n")
        fh.write("n_A  " + "  ".join(f"{p:>42}" for p in protos) + "\n")
        by_na: dict[int, dict[str, tuple[float, float]]] = {}
        for proto, n_adv, radius, mu, mt in agg_rows:
            by_na.setdefault(n_adv, {})[proto] = (mu, mt)
        for n_adv in sorted(by_na):
            cells = []
            for p in protos:
                mu, mt = by_na[n_adv].get(p, (float("nan"), float("nan")))
                cells.append(f"updates={mu:10.2f} transmissions={mt:10.2f}")
            fh.write(f"{n_adv:>3}  " + "  ".join(cells) + "\n")
        fh.write("\nsuccess rates\n")
        for proto, n_adv, radius, trials, wins, rate, conn in rate_rows:
            fh.write(
                f"protocol={proto} n_A={n_adv} radius={radius} rate={rate:.3f} "
                f"connectivity={conn:.3f} ({wins}/{trials})\n"
            )
    return rows


# -- graph check ------------------------------------------------------------------


def check_graph(cfg: ScenarioConfig, out: Path) -> str:
    """Certify (2F+1)-robustness of the scenario graph and report basics."""
    out.mkdir(parents=True, exist_ok=True)
    if isinstance(cfg.graph_spec, GeometricGraphSpec):
        g = resolve(cfg, 0).graph
    else:
        g = cfg.graph_spec.graph
    r = 2 * cfg.f + 1
    lines = [
        f"nodes: {g.n}",
        f"edges: {len(g.edges)}",
        f"connected: {is_connected(g)}",
        f"min_in_degree: {min_in_degree(g)}",
        f"alpha: {g.alpha}",
        f"omega: {g.omega if g.weights else None}",
    ]
    if r < g.n:
        try:
            verdict = check_robustness(g, r, 1)
            lines.append(f"robustness r={r} s=1: holds={verdict.holds}")
            if verdict.witness is not None:
                w1, w2 = verdict.witness
                lines.append(f"witness: {sorted(w1)} vs {sorted(w2)}")
            if min_in_degree(g) < r:
                lines.append(f"note: min in-degree {min_in_degree(g)} < {r} (necessary condition fails)")
        except CapacityError as exc:
            lines.append(f"robustness r={r}: not certified ({exc})")
    else:
        lines.append(f"robustness r={r}: not defined (requires r < n)")
    text = "\n".join(lines) + "\n"
    with open(out / "robustness.txt", "w") as fh:
        fh.write(text)
    write_adjacency_csv(g, str(out / "graph.csv"))
    _write_config(out, cfg)
    return text


# -- entry point --------------------------------------------------------------------


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="msrsim",
        description="Resilient ternary-consensus simulator: runs, sweeps, graph checks.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, helptext in [
        ("run", "execute one scenario (one run per trial)"),
        ("sweep", "execute a Monte Carlo sweep"),
        ("check-graph", "certify the scenario graph's robustness"),
    ]:
        p = sub.add_parser(name, help=helptext)
        p.add_argument("config", help="path to a JSON scenario config")
        p.add_argument("--out", help="output directory (default: <config stem>.<command>)")
        p.add_argument("--seed", type=int, help="override the config seed")
        p.add_argument("--trials", type=int, help="override the config trial count")
        if name == "sweep":
            p.add_argument("--jobs", type=int, default=1, help="worker processes (default 1)")

    args = parser.parse_args(argv)

    try:
        cfg = config_from_file(args.config)
        if args.seed is not None:
            cfg = replace(cfg, seed=args.seed)
        if args.trials is not None:
            cfg = replace(cfg, trials=args.trials)
    except (ConfigError, ValueError, KeyError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"cannot read config: {exc}", file=sys.stderr)
        return 2

    out = Path(args.out) if args.out else Path(
        Path(args.config).stem + "." + args.command.replace("-", "_")
    )
    try:
        if args.command == "run":
            run_scenario(cfg, out)
        elif args.command == "sweep":
            run_sweep(cfg, out, jobs=args.jobs)
        else:
            text = check_graph(cfg, out)
            print(text, end="")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    raise SystemExit(main())

"""Command-line entry point: model, simulate, measure, analyze, casestudy.

A thin sequential dispatcher over the library modules; every flag maps to a
module config field. Exit codes are uniform across subcommands: 0 for
success, 1 for usage or domain errors, 2 for infeasible results and failed
runs.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
import time
from pathlib import Path

from . import analysis, casestudy, fluidsim, loadgen
from .model import (
    Choice,
    ComputeSpec,
    IoOverhead,
    LinkSpec,
    TierPolicy,
    WorkloadSpec,
    decide,
    remote_completion,
    streaming_speed_score,
    theoretical_transfer_time,
)
from .quantities import (
    QuantityError,
    parse_bytes,
    parse_compute_rate,
    parse_rate,
    parse_seconds,
    parse_work,
)
from .records import LogFormatError, read_jsonl, write_jsonl
from .schedule import SpawnMode

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_INFEASIBLE = 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on bad arguments; the exit-code contract wants 1
    def error(self, message: str) -> None:  # type: ignore[override]
        raise UsageError(f"{self.format_usage().rstrip()}\n{self.prog}: {message}")


def _tiers_arg(text: str) -> TierPolicy:
    deadlines = [parse_seconds(part) for part in text.split(",") if part.strip()]
    if not deadlines:
        raise QuantityError(f"no tier deadlines in {text!r}")
    return TierPolicy.from_deadlines(deadlines)


def _float_list(text: str) -> list[float]:
    return [float(part) for part in text.split(",") if part.strip()]


def _int_list(text: str) -> list[int]:
    return [int(part) for part in text.split(",") if part.strip()]


def _fmt(value: float) -> str:
    return f"{value:.6g}"


def _emit_table(rows: list[tuple[str, str]]) -> None:
    width = max(len(key) for key, _ in rows)
    for key, value in rows:
        print(f"{key:<{width}}  {value}")


def _write_or_print(payload: str, out: str | None) -> None:
    if out:
        Path(out).write_text(payload + "\n", encoding="utf-8")
    else:
        print(payload)


def build_parser() -> _Parser:
    parser = _Parser(prog="streamscore", description=__doc__)
    common = _Parser(add_help=False)
    common.add_argument("--json", action="store_true", help="machine-readable output")
    common.add_argument("--out", help="output file (or directory for analyze)")

    sub = parser.add_subparsers(dest="command", required=True)

    p_model = sub.add_parser(
        "model", parents=[common], help="evaluate the completion-time model"
    )
    p_model.add_argument("--size", required=True, type=parse_bytes, help="data unit size, e.g. 0.5GB")
    p_model.add_argument("--bw", required=True, type=parse_rate, help="link bandwidth, e.g. 25Gbps")
    p_model.add_argument("--alpha", type=float, default=1.0, help="transfer efficiency in (0,1]")
    p_model.add_argument("--theta", type=float, default=1.0, help="file I/O overhead coefficient >= 1")
    p_model.add_argument("--work", type=parse_work, default=0.0, help="compute per unit, e.g. 34TFLOP")
    p_model.add_argument("--local-rate", type=parse_compute_rate, help="local compute rate, e.g. 34TF")
    p_model.add_argument("--remote-rate", type=parse_compute_rate, help="remote compute rate, e.g. 68TF")
    p_model.add_argument("--interval", type=parse_seconds, help="seconds between data units")
    p_model.add_argument("--worst", type=parse_seconds, help="measured worst-case transfer time")
    p_model.add_argument("--rtt", type=parse_seconds, default=0.0, help="round-trip time, e.g. 16ms")
    p_model.add_argument("--tiers", type=_tiers_arg, default=TierPolicy(), help="deadlines, e.g. 1s,10s,60s")
    p_model.set_defaults(func=cmd_model)

    p_sim = sub.add_parser(
        "simulate", parents=[common], help="run the bottleneck-link fluid simulator"
    )
    p_sim.add_argument("--scenario", help="scenario file (JSON or key = value lines)")
    p_sim.add_argument("--bw", type=parse_rate, help="link bandwidth")
    p_sim.add_argument("--alpha", type=float, help="transfer efficiency")
    p_sim.add_argument("--rtt", type=parse_seconds, help="round-trip time")
    p_sim.add_argument("--duration", type=parse_seconds, help="spawning window, e.g. 10s")
    p_sim.add_argument("--concurrency", type=float, help="clients per second")
    p_sim.add_argument("--size", type=parse_bytes, help="bytes per client")
    p_sim.add_argument("--parallel", type=int, help="TCP flows per client")
    p_sim.add_argument("--mode", type=SpawnMode.parse, help="simultaneous|scheduled")
    p_sim.add_argument("--startup", type=parse_seconds, help="per-client startup latency")
    p_sim.add_argument("--sweep", type=_float_list, help="concurrency values, e.g. 1,2,3,4,5,6,7,8")
    p_sim.add_argument("--parallel-list", type=_int_list, help="parallel-flow values, e.g. 2,4,8")
    p_sim.add_argument("--compare", help="measured JSONL log to compare against")
    p_sim.set_defaults(func=cmd_simulate)

    p_measure = sub.add_parser("measure", help="live measurement harness")
    measure_sub = p_measure.add_subparsers(dest="measure_command", required=True)

    p_serve = measure_sub.add_parser(
        "serve", parents=[common], help="run the listener pool until interrupted"
    )
    p_serve.add_argument("--base-port", required=True, type=int)
    p_serve.add_argument("--pool-size", type=int, default=8)
    p_serve.add_argument("--bind", default="127.0.0.1")
    p_serve.set_defaults(func=cmd_measure_serve)

    p_run = measure_sub.add_parser(
        "run", parents=[common], help="spawn transfer clients against a server pool"
    )
    p_run.add_argument("--server", required=True)
    p_run.add_argument("--base-port", required=True, type=int)
    p_run.add_argument("--pool-size", type=int, default=8)
    p_run.add_argument("--duration", required=True, type=parse_seconds)
    p_run.add_argument("--concurrency", required=True, type=float)
    p_run.add_argument("--parallel", type=int, default=1)
    p_run.add_argument("--size", required=True, type=parse_bytes)
    p_run.add_argument("--mode", type=SpawnMode.parse, default=SpawnMode.SIMULTANEOUS)
    p_run.add_argument("--connect-timeout", type=parse_seconds, default=10.0)
    p_run.add_argument("--transfer-timeout", type=parse_seconds, default=120.0)
    p_run.set_defaults(func=cmd_measure_run)

    p_analyze = sub.add_parser(
        "analyze", parents=[common], help="statistics and report from a JSONL log"
    )
    p_analyze.add_argument("--in", dest="infile", required=True, help="JSONL transfer log")
    p_analyze.add_argument("--link-bw", type=parse_rate, help="link bandwidth for SSS/utilization")
    p_analyze.add_argument("--alpha", type=float, default=1.0)
    p_analyze.add_argument("--rtt", type=parse_seconds, default=0.0)
    p_analyze.add_argument("--tiers", type=_tiers_arg, default=TierPolicy())
    p_analyze.add_argument("--compare", help="second JSONL log for per-stat ratios")
    p_analyze.set_defaults(func=cmd_analyze)

    p_case = sub.add_parser(
        "casestudy", parents=[common], help="per-workflow feasibility and budgets"
    )
    p_case.add_argument("--input", help="case study JSON (defaults to the bundled demo)")
    p_case.set_defaults(func=cmd_casestudy)

    return parser


def cmd_model(args) -> int:
    workload_kwargs = {}
    if args.size > 0:
        workload_kwargs["complexity"] = args.work / args.size
    elif args.work > 0:
        raise UsageError("--work > 0 requires --size > 0")
    workload = WorkloadSpec(
        unit_size=args.size, generation_interval=args.interval, **workload_kwargs
    )
    link = LinkSpec(bandwidth=args.bw, alpha=args.alpha, rtt=args.rtt)
    io = IoOverhead(args.theta)

    if args.work > 0 and args.remote_rate is None:
        raise UsageError("--remote-rate is required when --work > 0")
    remote_rate = args.remote_rate if args.remote_rate else 1.0
    local_rate = args.local_rate if args.local_rate else remote_rate
    compute = ComputeSpec(local_rate=local_rate, remote_rate=remote_rate)

    breakdown = remote_completion(workload, link, compute, io)

    sss_value = None
    if args.worst is not None:
        sss_value = streaming_speed_score(
            args.worst, theoretical_transfer_time(args.size, link)
        )

    decision = None
    if args.local_rate is not None:
        decision = decide(
            workload, link, compute, io, args.tiers, worst_case_transfer=args.worst
        )
    else:
        # still surface outright infeasibility without compute specs; drop the
        # local figure since no local rate was actually supplied
        needed = workload.required_stream_rate
        if needed is not None and needed > link.effective_rate:
            decision = dataclasses.replace(
                decide(workload, link, compute, io, args.tiers), local_s=None
            )

    tier = analysis.tier_feasibility_line(breakdown.total_s, args.tiers)
    delay_block = analysis.delay_comparator(
        trans_s=theoretical_transfer_time(args.size, link), prop_s=args.rtt / 2
    )

    if args.json:
        doc = {
            "breakdown": {
                "transfer_s": breakdown.transfer_s,
                "io_s": breakdown.io_s,
                "remote_s": breakdown.remote_s,
                "total_s": breakdown.total_s,
            },
            "sss": sss_value,
            "tier": None if tier == "none" else tier,
            "delay_model": delay_block,
            "decision": None
            if decision is None
            else {
                "choice": decision.choice.value,
                "gain": decision.gain,
                "tier_achieved": decision.tier_achieved,
                "rationale": decision.rationale,
                "local_s": decision.local_s,
            },
        }
        _write_or_print(json.dumps(doc, indent=2), args.out)
    else:
        rows = [
            ("transfer", f"{_fmt(breakdown.transfer_s)} s"),
            ("io overhead", f"{_fmt(breakdown.io_s)} s (theta {_fmt(args.theta)})"),
            ("remote compute", f"{_fmt(breakdown.remote_s)} s"),
            ("remote total", f"{_fmt(breakdown.total_s)} s"),
            ("tier", tier),
        ]
        if sss_value is not None:
            rows.append(("sss", _fmt(sss_value)))
        rows.append(
            (
                "delay total",
                f"{_fmt(delay_block['total_s'])} s "
                f"(propagation only {_fmt(delay_block['propagation_only_s'])} s, "
                f"{delay_block['label']})",
            )
        )
        if decision is not None:
            rows.append(
                (
                    "decision",
                    f"{decision.choice.value} (gain {_fmt(decision.gain)}): "
                    f"{decision.rationale}",
                )
            )
        _emit_table(rows)

    if decision is not None and decision.choice is Choice.INFEASIBLE:
        return EXIT_INFEASIBLE
    return EXIT_OK


def _scenario_from_args(args) -> fluidsim.Scenario:
    if args.scenario:
        base = fluidsim.load_scenario(args.scenario)
        link = LinkSpec(
            bandwidth=args.bw if args.bw is not None else base.link.bandwidth,
            alpha=args.alpha if args.alpha is not None else base.link.alpha,
            rtt=args.rtt if args.rtt is not None else base.link.rtt,
        )
        return fluidsim.Scenario(
            link=link,
            duration=args.duration if args.duration is not None else base.duration,
            concurrency=args.concurrency if args.concurrency is not None else base.concurrency,
            transfer_bytes=args.size if args.size is not None else base.transfer_bytes,
            parallel_flows=args.parallel if args.parallel is not None else base.parallel_flows,
            mode=args.mode if args.mode is not None else base.mode,
            startup_latency=args.startup if args.startup is not None else base.startup_latency,
        )
    missing = [
        flag
        for flag, value in (
            ("--bw", args.bw),
            ("--duration", args.duration),
            ("--concurrency", args.concurrency),
            ("--size", args.size),
        )
        if value is None
    ]
    if missing:
        raise UsageError(f"simulate requires {', '.join(missing)} (or --scenario)")
    return fluidsim.Scenario(
        link=LinkSpec(
            bandwidth=args.bw,
            alpha=args.alpha if args.alpha is not None else 1.0,
            rtt=args.rtt if args.rtt is not None else 0.0,
        ),
        duration=args.duration,
        concurrency=args.concurrency,
        transfer_bytes=args.size,
        parallel_flows=args.parallel if args.parallel is not None else 1,
        mode=args.mode if args.mode is not None else SpawnMode.SIMULTANEOUS,
        startup_latency=args.startup,
    )


def cmd_simulate(args) -> int:
    base = _scenario_from_args(args)

    if args.sweep:
        parallel_values = args.parallel_list or [base.parallel_flows]
        rows = fluidsim.sweep(base, args.sweep, parallel_values)
        if args.out:
            analysis.write_sweep_csv(rows, args.out)
        if args.json:
            print(
                json.dumps(
                    [
                        {
                            "concurrency": row.concurrency,
                            "parallel_flows": row.parallel_flows,
                            "mode": row.mode.value,
                            "offered_load": row.offered_load,
                            "worst_fct_s": row.worst_fct,
                            "sss": row.sss,
                            "utilization": row.utilization,
                        }
                        for row in rows
                    ],
                    indent=2,
                )
            )
        else:
            print("concurrency  parallel  mode          load    worst_fct  sss")
            for row in rows:
                print(
                    f"{row.concurrency:<11g}  {row.parallel_flows:<8d}  "
                    f"{row.mode.value:<12s}  {row.offered_load:<6.3g}  "
                    f"{row.worst_fct:<9.4g}  {row.sss:.4g}"
                )
        return EXIT_OK

    result = fluidsim.simulate(base)
    if args.out:
        meta = base.config_echo()
        meta["started_unix_ms"] = int(time.time() * 1000)
        write_jsonl(args.out, result.records, run_meta=meta)

    summary = result.summary()
    comparison = None
    if args.compare:
        _, measured = read_jsonl(args.compare)
        report = analysis.build_report(
            result.records,
            link=base.link,
            compare_records=measured,
            comparison_labels=("simulated", "measured"),
        )
        comparison = report["comparison"]

    if args.json:
        doc = {"summary": summary, "clients": len(result.records)}
        if comparison is not None:
            doc["comparison"] = comparison
        print(json.dumps(doc, indent=2))
    else:
        _emit_table(
            [
                ("clients", str(len(result.records))),
                ("worst fct", f"{_fmt(summary['max_fct'])} s"),
                ("utilization", _fmt(summary["utilization"])),
                ("sss", _fmt(summary["sss"])),
            ]
        )
        if comparison is not None:
            ratios = ", ".join(
                f"{name}={_fmt(value)}"
                for name, value in comparison["ratios"].items()
                if value is not None
            )
            print(f"simulated/measured ratios: {ratios}")
    return EXIT_OK


def cmd_measure_serve(args) -> int:
    config = loadgen.ServerConfig(
        base_port=args.base_port, pool_size=args.pool_size, bind_address=args.bind
    )
    last_port = config.ports[-1]
    server = loadgen.TransferServer(config)
    server.start()
    print(f"listening on {args.bind}:{config.base_port}-{last_port}", flush=True)
    try:
        while True:
            time.sleep(1.0)
    except KeyboardInterrupt:
        pass
    finally:
        server.stop()
    return EXIT_OK


def cmd_measure_run(args) -> int:
    config = loadgen.ClientRunConfig(
        server_address=args.server,
        base_port=args.base_port,
        pool_size=args.pool_size,
        duration=args.duration,
        concurrency=args.concurrency,
        transfer_bytes=int(args.size),
        parallel_flows=args.parallel,
        mode=args.mode,
        connect_timeout=args.connect_timeout,
        transfer_timeout=args.transfer_timeout,
    )
    log = loadgen.run_clients(config)
    if args.out:
        write_jsonl(args.out, log.records, run_meta=log.meta)

    ok = [r for r in log.records if r.ok]
    if args.json:
        doc = {
            "records": len(log.records),
            "failures": log.failures,
            "max_fct_s": max((r.fct_s for r in ok), default=None),
        }
        print(json.dumps(doc, indent=2))
    else:
        _emit_table(
            [
                ("records", str(len(log.records))),
                ("failures", str(log.failures)),
                (
                    "worst fct",
                    f"{_fmt(max(r.fct_s for r in ok))} s" if ok else "n/a",
                ),
            ]
        )
    return EXIT_OK if ok else EXIT_INFEASIBLE


def cmd_analyze(args) -> int:
    _, records = read_jsonl(args.infile)
    if not any(r.ok for r in records):
        raise UsageError(f"no successful records in {args.infile}")

    link = None
    if args.link_bw is not None:
        link = LinkSpec(bandwidth=args.link_bw, alpha=args.alpha, rtt=args.rtt)

    compare_records = None
    if args.compare:
        _, compare_records = read_jsonl(args.compare)

    report = analysis.build_report(
        records,
        link=link,
        policy=args.tiers,
        compare_records=compare_records,
    )
    if args.out:
        analysis.write_report(report, args.out)

    if args.json:
        print(json.dumps(report, indent=2))
    else:
        stats = report["stats"]
        rows = [
            ("records", str(stats["count"] + stats["failures"])),
            ("failures", str(stats["failures"])),
            ("max fct", f"{_fmt(stats['max'])} s"),
            ("mean fct", f"{_fmt(stats['mean'])} s"),
            ("p50/p90/p99", f"{_fmt(stats['p50'])} / {_fmt(stats['p90'])} / {_fmt(stats['p99'])} s"),
            ("regime", report["regime"]["regime"]),
        ]
        if report["sss"] is not None:
            rows.append(("sss", _fmt(report["sss"])))
        if report["regime"]["utilization"] is not None:
            rows.append(("utilization", _fmt(report["regime"]["utilization"])))
        if report["delay_model"] is not None:
            block = report["delay_model"]
            rows.append(
                (
                    "delay total",
                    f"{_fmt(block['total_s'])} s (propagation only "
                    f"{_fmt(block['propagation_only_s'])} s, {block['label']})",
                )
            )
        _emit_table(rows)
        for name, feasible in report["regime"]["tier_feasibility"].items():
            print(f"  {name}: {'yes' if feasible else 'no'}")
    return EXIT_OK


def cmd_casestudy(args) -> int:
    study = (
        casestudy.load_case_study(args.input)
        if args.input
        else casestudy.DEMO_CASE_STUDY
    )
    results = casestudy.evaluate(study)

    if args.json:
        doc = []
        for row in results:
            doc.append(
                {
                    "name": row.name,
                    "throughput_bytes_per_s": row.throughput,
                    "utilization": row.utilization,
                    "infeasible": row.infeasible,
                    "worst_fct_s": row.worst_fct,
                    "extrapolated": row.extrapolated,
                    "tiers": [
                        {
                            "tier": t.tier,
                            "deadline_s": t.deadline_s,
                            "budget_s": t.budget_s,
                            "required_remote_rate_flops": t.required_remote_rate,
                        }
                        for t in row.tiers
                    ],
                    "note": row.note,
                    "error": row.error,
                }
            )
        _write_or_print(json.dumps(doc, indent=2), args.out)
    else:
        lines = []
        for row in results:
            lines.append(f"{row.name}")
            lines.append(f"  throughput   {_fmt(row.throughput)} B/s")
            if row.error:
                lines.append(f"  error        {row.error}")
                continue
            lines.append(f"  utilization  {_fmt(row.utilization)}")
            if row.infeasible:
                lines.append(f"  INFEASIBLE   {row.note}")
                continue
            worst = f"{_fmt(row.worst_fct)} s"
            if row.extrapolated:
                worst += " (extrapolated)"
            lines.append(f"  worst fct    {worst}")
            for tier in row.tiers:
                rate = (
                    f"{_fmt(tier.required_remote_rate)} FLOPS"
                    if tier.required_remote_rate is not None
                    else "no budget remains"
                )
                lines.append(
                    f"  {tier.tier:<8s} (<{_fmt(tier.deadline_s)} s): "
                    f"budget {_fmt(tier.budget_s)} s, min remote rate {rate}"
                )
        _write_or_print("\n".join(lines), args.out)

    any_blocked = any(row.infeasible or row.error for row in results)
    return EXIT_INFEASIBLE if any_blocked else EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (QuantityError, LogFormatError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except loadgen.ServerStartupError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE


if __name__ == "__main__":
    raise SystemExit(main())

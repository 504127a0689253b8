"""Deterministic fluid simulation of a single bottleneck link.

Clients spawn on a schedule, wait out a startup latency, then share the
link's effective capacity equally (max-min fair at client granularity;
a client's parallel flows split its allocation, so they change nothing at
the bottleneck). Between events every active client's residual bytes drain
linearly; events are client activations and completions. The client
population is finite, so the run terminates even under overload.

Identical scenario inputs produce bit-identical results: the event loop is
single-threaded, events are ordered, and simultaneous completions resolve
in client-id order.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace
from pathlib import Path

from .model import LinkSpec, streaming_speed_score, theoretical_transfer_time
from .quantities import (
    parse_bytes,
    parse_rate,
    parse_seconds,
)
from .records import FlowRecord
from .schedule import SpawnMode, spawn_offsets

# events closer than this are processed at the same instant
_EVENT_EPS = 1e-12


@dataclass(frozen=True)
class Scenario:
    """One simulated load-generation run against a bottleneck link."""

    link: LinkSpec
    duration: float  # seconds of client spawning
    concurrency: float  # clients per second
    transfer_bytes: float  # bytes per client
    parallel_flows: int = 1
    mode: SpawnMode = SpawnMode.SIMULTANEOUS
    startup_latency: float | None = None  # None: one RTT, approximating connection setup

    def __post_init__(self) -> None:
        if self.duration <= 0:
            raise ValueError(f"duration must be > 0, got {self.duration}")
        if self.concurrency <= 0:
            raise ValueError(f"concurrency must be > 0, got {self.concurrency}")
        if self.transfer_bytes <= 0:
            raise ValueError(f"transfer_bytes must be > 0, got {self.transfer_bytes}")
        if self.parallel_flows <= 0:
            raise ValueError(f"parallel_flows must be > 0, got {self.parallel_flows}")
        if self.startup_latency is not None and self.startup_latency < 0:
            raise ValueError(
                f"startup_latency must be >= 0, got {self.startup_latency}"
            )

    @property
    def startup(self) -> float:
        return self.link.rtt if self.startup_latency is None else self.startup_latency

    def spawn_times(self) -> list[float]:
        return spawn_offsets(self.mode, self.concurrency, self.duration)

    def config_echo(self) -> dict:
        return {
            "source": "fluidsim",
            "bandwidth": self.link.bandwidth,
            "alpha": self.link.alpha,
            "rtt": self.link.rtt,
            "duration": self.duration,
            "concurrency": self.concurrency,
            "parallel_flows": self.parallel_flows,
            "transfer_bytes": self.transfer_bytes,
            "mode": self.mode.value,
            "startup_latency": self.startup,
        }


@dataclass(frozen=True)
class AllocationInterval:
    """A span during which a fixed client set shared the link equally."""

    start: float
    end: float
    client_ids: tuple[int, ...]
    rate_per_client: float  # bytes/s


@dataclass(frozen=True)
class SimResult:
    scenario: Scenario
    records: tuple[FlowRecord, ...]
    trace: tuple[AllocationInterval, ...]
    utilization: float  # delivered bytes over capacity x busy span
    max_fct: float

    def summary(self) -> dict:
        return {
            "utilization": self.utilization,
            "max_fct": self.max_fct,
            "sss": streaming_speed_score(
                self.max_fct,
                theoretical_transfer_time(self.scenario.transfer_bytes, self.scenario.link),
            ),
        }


def simulate(scenario: Scenario) -> SimResult:
    """Run the event loop to the last completion and collect flow records."""
    spawns = scenario.spawn_times()
    if not spawns:
        raise ValueError("scenario spawns zero clients")

    capacity = scenario.link.effective_rate
    startup = scenario.startup
    residual_eps = scenario.transfer_bytes * 1e-12

    # (activation, client_id); offsets are already non-decreasing
    pending: list[tuple[float, int]] = [
        (spawn + startup, cid) for cid, spawn in enumerate(spawns)
    ]
    next_pending = 0
    active: dict[int, float] = {}
    completions: dict[int, float] = {}
    trace: list[AllocationInterval] = []

    t = pending[0][0]

    def admit(now: float) -> None:
        nonlocal next_pending
        while next_pending < len(pending) and pending[next_pending][0] <= now + _EVENT_EPS:
            active[pending[next_pending][1]] = scenario.transfer_bytes
            next_pending += 1

    admit(t)
    while active or next_pending < len(pending):
        if not active:
            t = max(t, pending[next_pending][0])
            admit(t)
            continue

        n = len(active)
        rate = capacity / n
        min_residual = min(active.values())
        # multiply before dividing keeps equal-share completions exact
        finish_dt = min_residual * n / capacity
        t_finish = t + finish_dt
        t_arrival = pending[next_pending][0] if next_pending < len(pending) else math.inf

        ids = tuple(sorted(active))
        if t_arrival < t_finish - _EVENT_EPS:
            drained = capacity * (t_arrival - t) / n
            for cid in active:
                active[cid] -= drained
            trace.append(AllocationInterval(t, t_arrival, ids, rate))
            t = t_arrival
            admit(t)
        else:
            for cid in active:
                active[cid] -= min_residual
            trace.append(AllocationInterval(t, t_finish, ids, rate))
            t = t_finish
            done = sorted(cid for cid, left in active.items() if left <= residual_eps)
            for cid in done:
                completions[cid] = t
                del active[cid]
            admit(t)

    nbytes = int(round(scenario.transfer_bytes))
    records = tuple(
        FlowRecord(
            client_id=cid,
            spawn_s=spawn,
            complete_s=completions[cid],
            fct_s=completions[cid] - spawn,
            bytes=nbytes,
            flows=scenario.parallel_flows,
        )
        for cid, spawn in enumerate(spawns)
    )

    first_active = pending[0][0]
    last_complete = max(completions.values())
    span = last_complete - first_active
    delivered = scenario.transfer_bytes * len(spawns)
    utilization = min(1.0, delivered / (capacity * span)) if span > 0 else 1.0

    return SimResult(
        scenario=scenario,
        records=records,
        trace=tuple(trace),
        utilization=utilization,
        max_fct=max(r.fct_s for r in records),
    )


def worst_fct(result: SimResult) -> float:
    """Maximum flow completion time across the run's records."""
    if not result.records:
        raise ValueError("result has no records")
    return max(r.fct_s for r in result.records)


@dataclass(frozen=True)
class SweepRow:
    concurrency: float
    parallel_flows: int
    mode: SpawnMode
    offered_load: float  # offered bytes/s over raw link bandwidth
    worst_fct: float
    sss: float
    utilization: float


def sweep(
    base: Scenario,
    concurrency_values: list[float],
    parallel_values: list[int],
) -> list[SweepRow]:
    """Simulate every concurrency x parallel-flows combination of a scenario.

    Rows come back in input order (concurrency outer, parallel inner).
    """
    if not concurrency_values or not parallel_values:
        raise ValueError("sweep value lists must be non-empty")
    theoretical = theoretical_transfer_time(base.transfer_bytes, base.link)
    rows = []
    for concurrency in concurrency_values:
        for flows in parallel_values:
            scenario = replace(base, concurrency=concurrency, parallel_flows=flows)
            result = simulate(scenario)
            rows.append(
                SweepRow(
                    concurrency=concurrency,
                    parallel_flows=flows,
                    mode=scenario.mode,
                    offered_load=concurrency * base.transfer_bytes / base.link.bandwidth,
                    worst_fct=result.max_fct,
                    sss=streaming_speed_score(result.max_fct, theoretical),
                    utilization=result.utilization,
                )
            )
    return rows


_SCENARIO_KEYS = {
    "bandwidth",
    "alpha",
    "rtt",
    "duration",
    "concurrency",
    "parallel_flows",
    "transfer_bytes",
    "mode",
    "startup_latency",
}


def _coerce(value, parser) -> float:
    if isinstance(value, str):
        return parser(value)
    return float(value)


def scenario_from_mapping(raw: dict) -> Scenario:
    """Build a Scenario from parsed config data.

    Accepts nested {"link": {...}} or flattened link fields; string values go
    through the unit grammar, bare numbers are taken as SI.
    """
    flat = dict(raw)
    link_part = flat.pop("link", {})
    if not isinstance(link_part, dict):
        raise ValueError("'link' must be an object of link fields")
    flat.update(link_part)

    unknown = set(flat) - _SCENARIO_KEYS
    if unknown:
        raise ValueError(f"unknown scenario fields: {sorted(unknown)}")
    missing = {"bandwidth", "duration", "concurrency", "transfer_bytes"} - set(flat)
    if missing:
        raise ValueError(f"scenario is missing required fields: {sorted(missing)}")

    link = LinkSpec(
        bandwidth=_coerce(flat["bandwidth"], parse_rate),
        alpha=float(flat.get("alpha", 1.0)),
        rtt=_coerce(flat.get("rtt", 0.0), parse_seconds),
    )
    startup = flat.get("startup_latency")
    return Scenario(
        link=link,
        duration=_coerce(flat["duration"], parse_seconds),
        concurrency=float(flat["concurrency"]),
        transfer_bytes=_coerce(flat["transfer_bytes"], parse_bytes),
        parallel_flows=int(flat.get("parallel_flows", 1)),
        mode=SpawnMode.parse(str(flat.get("mode", "simultaneous"))),
        startup_latency=None if startup is None else _coerce(startup, parse_seconds),
    )


def load_scenario(path: Path | str) -> Scenario:
    """Load a scenario from JSON or flat ``key = value`` text."""
    text = Path(path).read_text(encoding="utf-8")
    stripped = text.lstrip()
    if stripped.startswith("{"):
        return scenario_from_mapping(json.loads(text))

    raw: dict = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected 'key = value', got {line!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        raw[key] = value
    return scenario_from_mapping(raw)

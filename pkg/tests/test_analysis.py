from __future__ import annotations

import csv
import json
import random

import pytest

from streamscore.analysis import (
    OPTIMISTIC_BASELINE_LABEL,
    Regime,
    build_report,
    classify_regime,
    delay_comparator,
    empirical_cdf,
    nearest_rank,
    reanalyze,
    regime_report,
    stats_ratios,
    summarize,
    summarize_values,
    utilization,
    write_report,
    write_sweep_csv,
)
from streamscore.fluidsim import Scenario, simulate, sweep
from streamscore.model import LinkSpec, TierPolicy
from streamscore.records import FlowRecord

GBPS_25 = 25e9 / 8


def make_records(fcts, failures=0, nbytes=500_000_000):
    records = [
        FlowRecord(
            client_id=i,
            spawn_s=0.0,
            complete_s=fct,
            fct_s=fct,
            bytes=nbytes,
            flows=1,
        )
        for i, fct in enumerate(fcts)
    ]
    for j in range(failures):
        records.append(
            FlowRecord(
                client_id=len(fcts) + j,
                spawn_s=0.0,
                complete_s=1.0,
                fct_s=1.0,
                bytes=0,
                flows=1,
                status="error",
                error="timeout",
            )
        )
    return records


# --- summarize ---


def test_summarize_singleton():
    stats = summarize(make_records([0.16]))
    assert stats.count == 1
    assert stats.max == stats.mean == stats.p50 == stats.p90 == stats.p99 == 0.16


def test_summarize_nearest_rank_on_1_to_100():
    values = [float(v) for v in range(1, 101)]
    random.Random(7).shuffle(values)
    stats = summarize(make_records(values))
    assert stats.p50 == 50.0
    assert stats.p90 == 90.0
    assert stats.p99 == 99.0
    assert stats.max == 100.0
    assert stats.mean == pytest.approx(50.5)


def test_summarize_excludes_failures():
    stats = summarize(make_records([1.0, 2.0], failures=3))
    assert stats.count == 2
    assert stats.failures == 3
    assert stats.max == 2.0


def test_summarize_requires_a_success():
    with pytest.raises(ValueError):
        summarize(make_records([], failures=2))


def test_nearest_rank_small_samples():
    assert nearest_rank([5.0], 99) == 5.0
    assert nearest_rank([1.0, 2.0], 50) == 1.0
    assert nearest_rank([1.0, 2.0], 51) == 2.0


# --- cdf ---


def test_cdf_uniform_steps():
    series = empirical_cdf(make_records([1.0, 2.0, 3.0, 4.0]))
    assert series == [(1.0, 0.25), (2.0, 0.5), (3.0, 0.75), (4.0, 1.0)]


def test_cdf_singleton():
    assert empirical_cdf(make_records([0.2])) == [(0.2, 1.0)]


def test_cdf_duplicates_coalesce_to_highest_rank():
    series = empirical_cdf(make_records([2.0, 2.0, 4.0]))
    assert series == [(2.0, pytest.approx(2 / 3)), (4.0, 1.0)]


def test_cdf_ends_at_exactly_one():
    series = empirical_cdf(make_records([random.Random(3).random() for _ in range(37)]))
    assert series[-1][1] == 1.0
    probs = [p for _, p in series]
    assert all(a < b for a, b in zip(probs, probs[1:]))


# --- regimes ---


def test_regime_examples():
    assert classify_regime(0.2) is Regime.LOW
    assert classify_regime(2.5) is Regime.MODERATE
    assert classify_regime(12.0) is Regime.SEVERE
    assert classify_regime(1.0) is Regime.MODERATE  # boundary: not < 1
    assert classify_regime(10.0) is Regime.SEVERE


def test_regime_respects_custom_tiers():
    policy = TierPolicy((("fast", 0.5), ("slow", 5.0)))
    assert classify_regime(0.7, policy) is Regime.MODERATE
    assert classify_regime(5.0, policy) is Regime.SEVERE


def test_regime_report_tier_feasibility():
    report = regime_report(2.5)
    assert report.regime is Regime.MODERATE
    assert report.tier_feasibility == {"Tier 1": False, "Tier 2": True, "Tier 3": True}


def test_regime_monotone_and_consistent_with_tiers():
    from streamscore.model import classify_tier

    policy = TierPolicy()
    order = [Regime.LOW, Regime.MODERATE, Regime.SEVERE]
    rng = random.Random(11)
    last = None
    for worst in sorted(rng.uniform(0, 120) for _ in range(200)):
        regime = classify_regime(worst, policy)
        if last is not None:
            assert order.index(regime) >= order.index(last)
        last = regime
        # low exactly when the worst transfer meets the tightest tier
        assert (regime is Regime.LOW) == (classify_tier(worst, policy) == "Tier 1")


# --- utilization ---


def test_utilization_examples():
    link = LinkSpec(bandwidth=GBPS_25)
    # 4 GB delivered in 2 s on 25 Gbps
    records = make_records([2.0] * 8, nbytes=500_000_000)
    assert utilization(records, link, window=2.0) == pytest.approx(0.64, rel=1e-9)
    # 3 GB/s sustained
    records = make_records([1.0] * 6, nbytes=500_000_000)
    assert utilization(records, link, window=1.0) == pytest.approx(0.96, rel=1e-9)
    assert utilization([], link, window=1.0) == 0.0


def test_utilization_clamps_and_warns(caplog):
    link = LinkSpec(bandwidth=1000.0)
    records = make_records([0.5], nbytes=5000)
    with caplog.at_level("WARNING", logger="streamscore.analysis"):
        assert utilization(records, link, window=1.0) == 1.0
    assert "clamping" in caplog.text


# --- report ---


def test_report_structure_and_round_trip(tmp_path):
    records = make_records([0.16, 0.18, 0.2, 5.0], failures=1)
    link = LinkSpec(bandwidth=GBPS_25, rtt=0.016)
    report = build_report(records, link=link)

    assert set(report) >= {"schema", "stats", "cdf", "regime", "sss", "decision", "comparison"}
    assert report["sss"] == pytest.approx(5.0 / 0.16, rel=1e-9)
    assert report["stats"]["failures"] == 1
    assert report["decision"] is None
    assert report["comparison"] is None
    assert report["delay_model"]["label"] == OPTIMISTIC_BASELINE_LABEL
    assert report["delay_model"]["propagation_only_s"] == pytest.approx(0.008)
    assert report["delay_model"]["total_s"] >= report["delay_model"]["propagation_only_s"]
    # both efficiency fits exposed and labeled
    eff = report["transfer_efficiency"]
    assert eff["alpha_from_worst_fct"] < eff["alpha_from_mean_fct"]

    # a report's embedded inputs re-analyze to identical statistics
    again = reanalyze(report)
    for field in ("count", "failures", "min", "max", "mean", "p50", "p90", "p99"):
        assert getattr(again, field) == report["stats"][field]

    paths = write_report(report, tmp_path)
    assert (tmp_path / "report.json").exists()
    assert (tmp_path / "series_cdf.csv").exists()
    loaded = json.loads((tmp_path / "report.json").read_text())
    assert loaded["stats"] == report["stats"]
    with open(tmp_path / "series_cdf.csv") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["fct_s", "cumulative_probability"]
    assert len(rows) == 1 + len(report["cdf"])
    assert paths


def test_report_comparison_block():
    simulated = make_records([0.16, 0.2])
    measured = make_records([0.2, 0.25])
    report = build_report(
        simulated,
        compare_records=measured,
        comparison_labels=("simulated", "measured"),
    )
    comparison = report["comparison"]
    assert comparison["simulated"]["max"] == 0.2
    assert comparison["measured"]["max"] == 0.25
    assert comparison["ratios"]["max"] == pytest.approx(0.2 / 0.25)


def test_stats_ratios_handles_zero_denominator():
    a = summarize_values([1.0, 2.0])
    b = summarize_values([1.0, 2.0])
    ratios = stats_ratios(a, b)
    assert ratios["max"] == 1.0
    assert ratios["p50"] == 1.0


def test_delay_comparator_always_labeled():
    block = delay_comparator(trans_s=0.16, prop_s=0.008, queue_s=5.0)
    assert block["label"] == OPTIMISTIC_BASELINE_LABEL
    assert block["total_s"] == pytest.approx(5.168)
    assert block["propagation_only_s"] == 0.008


# --- pipeline closure with the simulator ---


def test_equal_share_sim_analyzes_to_exact_stats():
    scenario = Scenario(
        link=LinkSpec(bandwidth=GBPS_25),
        duration=10.0,
        concurrency=8.0,
        transfer_bytes=0.5e9,
        startup_latency=0.0,
    )
    # single batch variant: all 80 records at 1.28 needs sustained overload;
    # use the one-batch scenario for the exact closure check
    one_batch = Scenario(
        link=LinkSpec(bandwidth=GBPS_25),
        duration=1.0,
        concurrency=8.0,
        transfer_bytes=0.5e9,
        startup_latency=0.0,
    )
    stats = summarize(simulate(one_batch).records)
    expected = 8 * 0.5e9 / GBPS_25
    assert stats.max == expected
    assert stats.p99 == expected
    assert stats.p50 == expected
    assert stats.mean == expected

    report = build_report(simulate(scenario).records, link=LinkSpec(bandwidth=GBPS_25))
    assert report["regime"]["regime"] == "moderate"


def test_sweep_csv_has_header_and_24_rows(tmp_path):
    base = Scenario(
        link=LinkSpec(bandwidth=GBPS_25),
        duration=10.0,
        concurrency=1.0,
        transfer_bytes=0.5e9,
        startup_latency=0.0,
    )
    rows = sweep(base, [1, 2, 3, 4, 5, 6, 7, 8], [2, 4, 8])
    path = tmp_path / "series_worst_fct_vs_load.csv"
    write_sweep_csv(rows, path)
    with open(path) as fh:
        parsed = list(csv.reader(fh))
    assert parsed[0][0] == "concurrency"
    assert len(parsed) == 25  # header + 24 data rows

import math
from dataclasses import replace

import pytest
from hypothesis import given
from hypothesis import strategies as st

from hybridv2v.config import BUILTIN_SCENARIOS, TABLE1_DEFAULT, scenario_variants
from hybridv2v.engine import SimResult, run_many
from hybridv2v.metrics import (
    METRICS,
    AggregationError,
    DeliveryRecord,
    SweepTable,
    aggregate,
    combine,
    run_metrics,
    summarize,
    write_csv,
)


def record(i, hops, delay, ok=True, method="none", recovery=0.0):
    if not ok:
        return DeliveryRecord(i, "failed", hops, hops, 0, math.nan, recovery, method or "exhausted")
    return DeliveryRecord(i, "delivered", hops, hops, 0, delay, recovery, method)


def fake(cfg, recs):
    return SimResult(cfg, list(recs))


def test_run_metrics_examples():
    recs = [record(0, 3, 150.0), record(1, 5, 400.0, method="alternate_rsu", recovery=200.0),
            record(2, 2, 0.0, ok=False, method="exhausted")]
    m = run_metrics(fake(TABLE1_DEFAULT, recs))
    assert m == {"hops": 4.0, "e2e_delay_ms": 275.0, "recovery_delay_ms": 200.0, "delivery_ratio": 2 / 3}
    empty = run_metrics(fake(TABLE1_DEFAULT, []))
    assert all(math.isnan(v) for v in empty.values())


def test_single_run_has_zero_stddev():
    table = aggregate([fake(TABLE1_DEFAULT, [record(0, 3, 150.0)])], "vehicle_count")
    assert {r.metric for r in table.rows} == {"hops", "e2e_delay_ms", "delivery_ratio"}
    assert all(r.stddev == 0.0 and r.n == 1 and r.x == 60 for r in table.rows)


def test_mean_and_sample_stddev():
    runs = [fake(replace(TABLE1_DEFAULT, seed=s), [record(0, h, 10.0 * h)]) for s, h in ((1, 2), (2, 4), (3, 6))]
    (row,) = aggregate(runs, "vehicle_count").series("run", "hops")
    assert (row.mean, row.stddev, row.n) == (4.0, 2.0, 3)


def test_heterogeneous_configs_are_rejected():
    a = fake(TABLE1_DEFAULT, [record(0, 1, 1.0)])
    b = fake(TABLE1_DEFAULT.with_values(v2v_range_m=350.0), [record(0, 1, 1.0)])
    with pytest.raises(AggregationError, match="v2v_range_m"):
        aggregate([a, b], "vehicle_count")
    with pytest.raises(AggregationError, match="nonsense"):
        aggregate([a], "nonsense")
    # the grouping variable itself and the seed may differ
    c = fake(replace(TABLE1_DEFAULT.with_values(vehicle_count=80), seed=9), [record(0, 1, 1.0)])
    assert [r.x for r in aggregate([a, c], "vehicle_count").series("run", "hops")] == [60, 80]


def test_combine_refuses_mixed_variables():
    with pytest.raises(AggregationError):
        combine([SweepTable("vehicle_count"), SweepTable("seed")])


@given(
    st.lists(st.tuples(st.sampled_from([20, 40, 60]), st.integers(1, 9), st.floats(0.0, 1e4)), min_size=1, max_size=12),
    st.randoms(use_true_random=False),
)
def test_aggregation_ignores_input_order(items, rnd):
    runs = [
        fake(replace(TABLE1_DEFAULT.with_values(vehicle_count=n), seed=i), [record(0, h, d)])
        for i, (n, h, d) in enumerate(items)
    ]
    shuffled = runs[:]
    rnd.shuffle(shuffled)
    assert aggregate(runs, "vehicle_count").rows == aggregate(shuffled, "vehicle_count").rows


def test_empty_table_writes_header_only(tmp_path):
    path = tmp_path / "t.csv"
    write_csv(SweepTable("vehicle_count"), path)
    assert path.read_text() == "x,label,metric,mean,stddev,n\n"


def test_csv_format(tmp_path):
    runs = [fake(replace(TABLE1_DEFAULT, seed=s), [record(0, h, 0.5)]) for s, h in ((1, 2), (2, 3))]
    path = tmp_path / "t.csv"
    write_csv(aggregate(runs, "vehicle_count").only("hops"), path)
    assert path.read_text() == "x,label,metric,mean,stddev,n\n60,run,hops,2.5,0.7071067811865476,2\n"


def test_summarize_single_point():
    runs = [fake(TABLE1_DEFAULT, [record(0, 2, 10.0)]), fake(TABLE1_DEFAULT, [record(0, 4, 30.0, ok=False)])]
    t = summarize(runs, "x", 3.0)
    ratio = t.series("x", "delivery_ratio")[0]
    assert (ratio.x, ratio.mean, ratio.n) == (3.0, 0.5, 2)
    assert t.series("x", "hops")[0].n == 1


def test_density_sweep_is_byte_identical(tmp_path):
    configs = [
        replace(c.with_values(vehicle_count=n, sim_duration_s=20.0), seed=s)
        for _, c in scenario_variants("fig4_hops_sweep")
        for n in (40, 80)
        for s in (1, 2)
    ]
    labels = [l for l, _ in scenario_variants("fig4_hops_sweep") for _ in range(4)]
    paths = []
    for k in range(2):
        results = run_many(configs)
        table = combine(
            aggregate([r for r, l in zip(results, labels) if l == lab], "vehicle_count", lab)
            for lab in dict.fromkeys(labels)
        )
        assert table.labels() == ["d2d_550", "gpsr_250", "gpsr_350"]
        for r in table.only("delivery_ratio").rows:
            assert 0.0 <= r.mean <= 1.0
        paths.append(tmp_path / f"{k}.csv")
        write_csv(table, paths[-1])
    assert paths[0].read_bytes() == paths[1].read_bytes()


def test_metric_names():
    assert METRICS == ("hops", "e2e_delay_ms", "recovery_delay_ms", "delivery_ratio")
    assert "fig4_hops_sweep" in BUILTIN_SCENARIOS

import csv
import io
import json

import pytest

from qnt.experiments import (
    CSV_HEADER,
    ExperimentConfig,
    mse_point,
    run_mse_curve,
    run_qcrb_sweep,
    run_to_files,
    write_csv,
)

GRID = [round(0.05 * k, 2) for k in range(1, 15)]


def sweep(**kw):
    return ExperimentConfig(kind="qcrb_sweep", **kw)


def test_sweep_cardinality():
    rows = run_qcrb_sweep(sweep(theta_grid=GRID))
    assert len(rows) == 2 * 4 * 14
    assert not any(r.singular for r in rows)


def test_singular_marker():
    rows = run_qcrb_sweep(sweep(sizes=[4], theta_grid=[0.5], include_singular=True))
    by_theta = {(r.variant, r.theta_star): r for r in rows}
    assert by_theta[("Z", 0.75)].singular
    assert by_theta[("GHZ", 0.75)].singular
    assert not by_theta[("Z", 0.5)].singular
    buf = io.StringIO()
    write_csv(rows, buf)
    assert "singular" in buf.getvalue()


def test_theta_grid_capped_by_default():
    cfg = sweep()
    assert max(cfg.theta_grid) == 0.74
    with pytest.raises(ValueError):
        sweep(theta_grid=[0.8])


def test_qcrb_grows_with_size_at_low_noise(capsys):
    rows = run_qcrb_sweep(sweep(theta_grid=[0.1]))
    for variant in ("Z", "GHZ"):
        values = [r.value for r in rows if r.variant == variant]
        with capsys.disabled():
            print(f"\nQCRB at theta*=0.1, {variant}, n=4..7: " + ", ".join(f"{v:.4f}" for v in values))
        assert values == sorted(values)


def test_noiseless_mse_is_exactly_zero():
    for variant in ("Z", "GHZ"):
        value, failures = mse_point(5, variant, 0.0, 300, trials=5, seed=1)
        assert value == 0.0
        assert failures == 0


def test_mse_decreases_with_samples():
    cfg = ExperimentConfig(kind="mse_curve", sizes=[4, 6], sample_points=[100, 10000], trials=200, seed=3)
    rows = run_mse_curve(cfg)
    for n in (4, 6):
        for variant in ("Z", "GHZ"):
            small, large = [r.value for r in rows if r.n == n and r.variant == variant]
            assert large < small


def test_mse_nonincreasing_within_noise_allowance():
    cfg = ExperimentConfig(kind="mse_curve", sizes=[4, 7], seed=11)
    rows = run_mse_curve(cfg)
    for n in (4, 7):
        for variant in ("Z", "GHZ"):
            values = [r.value for r in rows if r.n == n and r.variant == variant]
            for a, b in zip(values, values[1:]):
                assert b <= 1.1 * a


def test_mse_rows_are_deterministic_and_order_free():
    cfg = ExperimentConfig(kind="mse_curve", sizes=[5, 4], variants=["GHZ", "Z"],
                           sample_points=[200, 400], trials=10, seed=9)
    a = run_mse_curve(cfg)
    b = run_mse_curve(ExperimentConfig(kind="mse_curve", sizes=[4, 5], variants=["Z", "GHZ"],
                                       sample_points=[200, 400], trials=10, seed=9))
    assert a == b
    c = run_mse_curve(ExperimentConfig(kind="mse_curve", sizes=[4, 5], variants=["Z", "GHZ"],
                                       sample_points=[200, 400], trials=10, seed=10))
    assert a != c


def test_threads_do_not_change_results():
    base = dict(kind="mse_curve", sizes=[4], sample_points=[100, 300], trials=8, seed=2)
    assert run_mse_curve(ExperimentConfig(**base)) == run_mse_curve(ExperimentConfig(threads=2, **base))


def test_failures_are_counted():
    # tiny samples at n=7 push the GHZ sign equation out of range now and then
    value, failures = mse_point(7, "GHZ", 0.1, 30, trials=200, seed=0)
    assert failures > 0
    assert value < 0.1


def test_files_and_metadata(tmp_path):
    cfg = ExperimentConfig(kind="mse_curve", sizes=[4], sample_points=[100], trials=3, seed=4)
    out = tmp_path / "mse.csv"
    run_to_files(cfg, out)
    with open(out) as fh:
        reader = csv.reader(fh)
        assert tuple(next(reader)) == CSV_HEADER
        rows = list(reader)
    assert len(rows) == 2
    assert rows[0][:5] == ["mse_curve", "4", "GHZ", "0.1", "100"]
    meta = json.loads((tmp_path / "mse.csv.meta.json").read_text())
    assert meta["config"]["trials"] == 3
    assert {"version", "wall_time_s", "aggregation"} <= set(meta)


@pytest.mark.parametrize(
    "bad",
    [
        dict(kind="nonsense"),
        dict(kind="mse_curve", sizes=[2]),
        dict(kind="mse_curve", sizes=[9]),
        dict(kind="mse_curve", trials=0),
        dict(kind="mse_curve", sample_points=[200, 100]),
        dict(kind="mse_curve", theta_star=0.9),
        dict(kind="qcrb_sweep", theta_grid=[0.0]),
    ],
)
def test_config_validation(bad):
    with pytest.raises(ValueError):
        ExperimentConfig(**bad)


def test_config_from_dict_rejects_unknown_keys():
    with pytest.raises(ValueError):
        ExperimentConfig.from_dict({"kind": "mse_curve", "trails": 10})
    cfg = ExperimentConfig.from_dict({"kind": "MseCurve", "trials": 10})
    assert cfg.kind == "mse_curve"

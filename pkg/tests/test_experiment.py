import csv

import numpy as np
import pytest

from risisac.config import SystemConfig
from risisac.experiment import (
    BEAMPATTERN_POINTS,
    RAW_COLUMNS,
    SUMMARY_COLUMNS,
    ExperimentSpec,
    beampattern_path,
    raw_path,
    run_experiment,
)

BASE = SystemConfig(M=3, K=2, N=4, max_iters=8)


def read(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def spec(tmp_path, **kw):
    args = dict(mode="snr", sweep="N", values=[2, 4], trials=2, schemes=["proposed"], out=tmp_path / "s.csv", base=BASE)
    args.update(kw)
    return ExperimentSpec(**args)


def test_summary_layout(tmp_path):
    s = spec(tmp_path, schemes=["proposed", "comm_only"], raw=True)
    run_experiment(s)
    rows = read(s.out)
    assert list(rows[0]) == SUMMARY_COLUMNS
    assert [(r["sweep_value"], r["scheme"]) for r in rows] == [
        ("2.0", "proposed"),
        ("2.0", "comm_only"),
        ("4.0", "proposed"),
        ("4.0", "comm_only"),
    ]
    assert all(r["sweep_var"] == "N" and int(r["trials"]) == 2 for r in rows)
    raw = read(raw_path(s.out))
    assert list(raw[0]) == RAW_COLUMNS
    assert len(raw) == 8
    assert {r["seed"] for r in raw} == {"0", "1"}
    mean = np.mean([float(r["sum_rate"]) for r in raw if r["sweep_value"] == "2.0" and r["scheme"] == "proposed"])
    assert float(rows[0]["sum_rate_mean"]) == pytest.approx(mean)


def test_files_are_reproducible_without_timing(tmp_path):
    a = spec(tmp_path, out=tmp_path / "a.csv", timing=False, raw=True)
    b = spec(tmp_path, out=tmp_path / "b.csv", timing=False, raw=True)
    run_experiment(a)
    run_experiment(b)
    assert a.out.read_bytes() == b.out.read_bytes()
    assert raw_path(a.out).read_bytes() == raw_path(b.out).read_bytes()


def test_seed_base_shifts_trials(tmp_path):
    res = run_experiment(spec(tmp_path, values=[4], trials=1, seed_base=5))
    assert res[0].seed == 5


def test_infeasible_trials_are_excluded(tmp_path):
    s = spec(tmp_path, sweep="Gamma_t", values=[1.0, 1e12], raw=True)
    run_experiment(s)
    rows = read(s.out)
    assert rows[1]["trials"] == "0" and rows[1]["sum_rate_mean"] == "nan"
    assert {r["status"] for r in read(raw_path(s.out)) if r["sweep_value"] == "1000000000000.0"} == {"infeasible"}


def test_db_sweeps_convert(tmp_path):
    res = run_experiment(spec(tmp_path, sweep="Pt_dBm", values=[30.0], trials=1))
    assert res[0].sweep_value == 30.0 and res[0].status in ("ok", "flagged")


def test_iterations_trace(tmp_path):
    s = spec(tmp_path, sweep="iterations", values=[1, 2, 3], mode="crb", base=BASE.with_(eps_crb=1e3))
    run_experiment(s)
    rows = read(s.out)
    assert [r["sweep_value"] for r in rows] == ["1.0", "2.0", "3.0"]
    assert all(r["sweep_var"] == "iterations" for r in rows)


def test_beampattern_files(tmp_path):
    s = spec(tmp_path, sweep="beampattern", values=[], schemes=["proposed", "separate"], trials=1)
    run_experiment(s)
    for scheme in s.schemes:
        rows = read(beampattern_path(s.out, scheme, 2))
        assert list(rows[0]) == ["angle_rad", "gain_linear", "gain_db"]
        assert len(rows) == BEAMPATTERN_POINTS
        assert float(rows[0]["angle_rad"]) == pytest.approx(-np.pi / 2)
        top = max(float(r["gain_db"]) for r in rows)
        assert top == pytest.approx(0.0, abs=1e-9)


@pytest.mark.parametrize(
    "kw",
    [
        dict(values=[4, 2]),
        dict(values=[2, 2]),
        dict(trials=0),
        dict(schemes=["magic"]),
        dict(schemes=[]),
        dict(mode="power"),
        dict(sweep="kappa"),
        dict(values=[]),
    ],
)
def test_invalid_specs(tmp_path, kw):
    with pytest.raises(ValueError):
        spec(tmp_path, **kw)


def test_parallel_workers_match_serial(tmp_path):
    a = spec(tmp_path, out=tmp_path / "a.csv", timing=False, values=[4])
    b = spec(tmp_path, out=tmp_path / "b.csv", timing=False, values=[4], workers=2)
    run_experiment(a)
    run_experiment(b)
    assert a.out.read_bytes() == b.out.read_bytes()

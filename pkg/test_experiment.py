import glob
import json
import math
import os

import numpy as np
import pandas as pd
import pytest

import experiment
from errors import SingularityError, SpecError
from experiment import (
    NOISE_COLUMNS,
    RECOVERY_COLUMNS,
    STAP_COLUMNS,
    ExperimentRunner,
    ExperimentSpec,
    derive_seed,
    emit_analysis_tables,
    run_experiment,
    run_noise_sweep,
    run_recovery_percentage,
    run_stap_support,
)
from sensing import FourierEnsemble, GaussianEnsemble, SpatialTemporalEnsemble
from signals import NOISELESS

SPECS_DIR = os.path.join(os.path.dirname(os.path.abspath(__file__)), "specs")


def _small_recovery(**overrides):
    data = {
        "kind": "RecoveryPercentage",
        "name": "small",
        "N": 64,
        "sparsity": [2, 3],
        "m": [24, 32],
        "trials": 6,
        "base_seed": 11,
        "algorithms": ["AMOP", "OMP", "CoSaMP"],
    }
    data.update(overrides)
    return ExperimentSpec.from_dict(data)


def _without_wall_time(frame):
    return frame.drop(columns=["wall_time_ms"])


def test_derive_seed_is_stable_and_63_bit():
    a = derive_seed(7, "m=32|S=2|snr=noiseless", 3, "AMOP")
    assert a == derive_seed(7, "m=32|S=2|snr=noiseless", 3, "AMOP")
    assert 0 <= a < 2 ** 63
    assert a != derive_seed(7, "m=32|S=2|snr=noiseless", 3, "OMP")


def test_derived_seeds_are_distinct_across_a_sweep():
    seeds = {
        derive_seed(1, f"m={m}|S={s}|snr=noiseless", t, alg)
        for m in range(16, 129, 8)
        for s in (4, 20)
        for t in range(100)
        for alg in ("AMOP", "OMP", "CoSaMP")
    }
    assert len(seeds) == 15 * 2 * 100 * 3


def test_spec_defaults_are_materialized():
    spec = ExperimentSpec.from_dict({"kind": "RecoveryPercentage"})
    data = spec.to_dict()
    assert set(data) == {f for f in ExperimentSpec.__dataclass_fields__}
    assert data["ensemble"] == {"kind": "Gaussian"}
    assert data["field"] == "real"
    assert data["snr_db"] == ["noiseless"]
    assert data["trials"] == experiment.DEFAULT_TRIALS
    assert data["output"] == "experiment.csv"
    assert ExperimentSpec.from_dict(json.loads(json.dumps(data))).to_dict() == data


def test_complex_ensemble_defaults_to_complex_field():
    spec = ExperimentSpec.from_dict({"kind": "RecoveryPercentage", "ensemble": {"kind": "Fourier"}})
    assert spec.field == "complex"
    assert isinstance(spec.ensemble, FourierEnsemble)


@pytest.mark.parametrize("data, field", [
    ({"kind": "RecoveryPercentage", "trails": 5}, "trails"),
    ({"kind": "Histogram"}, "kind"),
    ({"name": "no-kind"}, "kind"),
    ({"kind": "RecoveryPercentage", "trials": 0}, "trials"),
    ({"kind": "RecoveryPercentage", "m": []}, "m"),
    ({"kind": "RecoveryPercentage", "m": [300]}, "m"),
    ({"kind": "RecoveryPercentage", "algorithms": ["LASSO"]}, "algorithms"),
    ({"kind": "RecoveryPercentage", "sparsity": [30], "m": [64]}, "algorithms"),
    ({"kind": "RecoveryPercentage", "snr_db": ["loud"]}, "snr_db"),
    ({"kind": "RecoveryPercentage", "ensemble": {"kind": "Toeplitz"}}, "ensemble"),
    ({"kind": "RecoveryPercentage", "signal": {"kind": "Exponential", "alpha": 2.0}}, "signal"),
    ({"kind": "RecoveryPercentage", "amop": {"thresh": 0.2}}, "amop"),
    ({"kind": "RecoveryPercentage", "amop": {"threshold": 1.5}}, "amop"),
    ({"kind": "NoiseSweep", "sparsity": [4, 8]}, "sparsity"),
    ({"kind": "StapSupport"}, "ensemble"),
    ({"kind": "PminTable", "thresholds": [0.0]}, "thresholds"),
    ({"kind": "DynamicRangeCurve", "s_max": 1}, "s_max"),
])
def test_invalid_specs_name_the_field(data, field):
    with pytest.raises(SpecError) as info:
        ExperimentSpec.from_dict(data)
    assert info.value.field == field


def test_stap_spec_takes_dimensions_from_ensemble():
    spec = ExperimentSpec.from_dict({
        "kind": "StapSupport",
        "ensemble": {"kind": "SpatialTemporal"},
        "sparsity": [20],
    })
    assert spec.N == 900 and spec.m == [224]
    assert spec.field == "complex"


def test_amop_overrides_reach_the_config():
    spec = ExperimentSpec.from_dict({"kind": "RecoveryPercentage", "amop": {"threshold": 0.5, "cap_k": 3}})
    cfg = spec.amop_config(64, NOISELESS)
    assert (cfg.threshold, cfg.cap_k, cfg.max_iters) == (0.5, 3, 64)
    assert abs(spec.amop_config(64, 10.0).halt_eps - 10 ** -0.5) < 1e-15


def test_with_seed_only_changes_the_seed():
    spec = _small_recovery()
    other = spec.with_seed(99)
    assert other.base_seed == 99
    assert {k: v for k, v in other.to_dict().items() if k != "base_seed"} == \
        {k: v for k, v in spec.to_dict().items() if k != "base_seed"}


def test_load_reports_bad_json(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text("{not json")
    with pytest.raises(SpecError):
        ExperimentSpec.load(str(path))


@pytest.mark.parametrize("path", sorted(glob.glob(os.path.join(SPECS_DIR, "*.json"))))
def test_bundled_specs_are_fully_materialized(path):
    with open(path) as f:
        data = json.load(f)
    assert ExperimentSpec.from_dict(data).to_dict() == data


def test_recovery_percentage_table():
    result = run_recovery_percentage(_small_recovery())
    table = result.table
    assert list(table.columns) == RECOVERY_COLUMNS
    assert len(table) == 2 * 2 * 3
    assert (table["trials"] == 6).all()
    assert table["percentage"].between(0, 100).all()
    np.testing.assert_allclose(table["percentage"], 100.0 * table["successes"] / table["trials"])
    assert set(table["ensemble"]) == {"Gaussian"} and set(table["signal_model"]) == {"Flat"}
    assert len(result.trials) == 2 * 2 * 6 * 3
    assert result.trials["seed"].is_unique


def test_square_gaussian_single_trial_recovers():
    # square and invertible: any support holding the true atom fits y exactly
    spec = ExperimentSpec.from_dict({
        "kind": "RecoveryPercentage", "ensemble": {"kind": "Gaussian"},
        "N": 16, "sparsity": [1], "m": [16], "trials": 1, "algorithms": ["AMOP"],
    })
    table = run_experiment(spec).table
    assert table["percentage"].iloc[0] == 100.0


def test_success_uses_the_spec_exact_tolerance(monkeypatch):
    seen = []

    def judged(x_true, x_est, tol):
        seen.append(tol)
        return False

    monkeypatch.setattr(experiment, "exact_recovery", judged)
    result = run_experiment(_small_recovery(exact_tol=1e-3))
    assert seen and set(seen) == {1e-3}
    assert not result.trials["success"].any()
    assert (result.table["percentage"] == 0).all()


def _amop_and_cosamp_totals(table):
    totals = table.groupby("algorithm")["successes"].sum()
    return int(totals["AMOP"]), int(totals["CoSaMP"])


def test_signal_model_specs_put_amop_level_with_cosamp():
    outcomes = {}
    for name in ("piecewise_flat", "exponential", "polynomial"):
        data = ExperimentSpec.load(os.path.join(SPECS_DIR, f"{name}.json")).to_dict()
        assert data["algorithms"] == ["AMOP", "OMP", "CoSaMP"]
        data.update(m=[32, 48, 64], trials=20)
        table = run_experiment(ExperimentSpec.from_dict(data)).table
        assert set(table["signal_model"]) == {data["signal"]["kind"]}
        outcomes[name] = _amop_and_cosamp_totals(table)
    assert any(amop_ok >= cosamp_ok for amop_ok, cosamp_ok in outcomes.values()), outcomes


def test_runs_are_deterministic_and_worker_independent():
    spec = _small_recovery()
    first = ExperimentRunner(spec, workers=1).run()
    second = ExperimentRunner(spec, workers=3).run()
    pd.testing.assert_frame_equal(first.table, second.table)
    pd.testing.assert_frame_equal(_without_wall_time(first.trials), _without_wall_time(second.trials))


def test_seed_changes_results():
    base = run_experiment(_small_recovery()).trials
    moved = run_experiment(_small_recovery(base_seed=12)).trials
    assert not base["seed"].equals(moved["seed"])


class _Recorder:
    def __init__(self, name, seen, inner):
        self.name = name
        self.seen = seen
        self.inner = inner

    def recover(self, A, y):
        self.seen.append((self.name, A.copy(), y.copy()))
        return self.inner.recover(A, y)


def test_algorithms_share_each_trial_instance(monkeypatch):
    seen = []
    for name in ("AMOP", "OMP"):
        factory = experiment.ALGORITHMS[name]
        monkeypatch.setitem(
            experiment.ALGORITHMS, name,
            lambda cfg, S, name=name, factory=factory: _Recorder(name, seen, factory(cfg, S)),
        )
    spec = _small_recovery(algorithms=["AMOP", "OMP"], sparsity=[2], m=[32], trials=4)
    records = ExperimentRunner(spec, workers=1).run().trials
    assert [name for name, _, _ in seen] == ["AMOP", "OMP"] * 4
    for (_, A1, y1), (_, A2, y2) in zip(seen[::2], seen[1::2]):
        np.testing.assert_array_equal(A1, A2)
        np.testing.assert_array_equal(y1, y2)
    # fresh instance per trial
    assert not np.array_equal(seen[0][2], seen[2][2])
    amop = records[records["algorithm"] == "AMOP"].reset_index(drop=True)
    omp = records[records["algorithm"] == "OMP"].reset_index(drop=True)
    assert (amop["trial"] == omp["trial"]).all()
    assert not (amop["seed"] == omp["seed"]).any()


def test_noise_sweep_table():
    spec = ExperimentSpec.from_dict({
        "kind": "NoiseSweep",
        "ensemble": {"kind": "Fourier"},
        "N": 64,
        "sparsity": [4],
        "m": [32],
        "snr_db": [10, "noiseless"],
        "trials": 9,
        "algorithms": ["AMOP", "CoSaMP"],
    })
    table = run_noise_sweep(spec).table
    assert list(table.columns) == NOISE_COLUMNS
    assert list(table["snr_db"]) == ["10", "10", "noiseless", "noiseless"]
    assert (table["q10"] <= table["median_rel_error"]).all()
    assert (table["median_rel_error"] <= table["q90"]).all()
    noiseless_amop = table[(table["snr_db"] == "noiseless") & (table["algorithm"] == "AMOP")]
    assert noiseless_amop["median_rel_error"].iloc[0] < 1e-6


def test_stap_support_table():
    spec = ExperimentSpec(
        kind="StapSupport",
        ensemble=SpatialTemporalEnsemble(4, 3, 5, 6),
        sparsity=[2],
        trials=4,
        algorithms=["AMOP", "CoSaMP"],
    )
    assert (spec.N, spec.m) == (30, [12])
    result = run_stap_support(spec)
    table = result.table
    assert list(table.columns) == STAP_COLUMNS
    assert sorted(set(table["tolerance"])) == [0, 1, 2]
    for algorithm in ("AMOP", "CoSaMP"):
        hits = table[table["algorithm"] == algorithm].sort_values("tolerance")["mean_hits"].to_list()
        assert hits == sorted(hits)
        assert all(0 <= h <= 2 for h in hits)
    assert {"hits_tol0", "false_alarms_tol2"} <= set(result.trials.columns)


def test_analysis_tables():
    pmin = emit_analysis_tables(ExperimentSpec(kind="PminTable", k_max=5, thresholds=[0.3, 0.6]))
    assert list(pmin.table.columns) == ["K", "T=0.3", "T=0.6", "romp_guarantee"]
    assert pmin.trials is None
    drange = emit_analysis_tables(ExperimentSpec(kind="DynamicRangeCurve", s_max=8, noise_levels=[0.0, 0.1]))
    assert list(drange.table["s"]) == list(range(2, 9))
    assert drange.metadata == {"log_base": "ln"}


def test_runner_rejects_wrong_kind():
    with pytest.raises(SpecError):
        ExperimentRunner(_small_recovery()).run_noise_sweep()


class _Singular:
    name = "AMOP"

    def recover(self, A, y):
        raise SingularityError("rank-deficient system")


def test_numerical_failures_become_failed_trials(monkeypatch):
    monkeypatch.setitem(experiment.ALGORITHMS, "AMOP", lambda cfg, S: _Singular())
    spec = _small_recovery(sparsity=[2], m=[24], trials=3, algorithms=["AMOP", "OMP"])
    result = run_experiment(spec)
    failed = result.trials[result.trials["algorithm"] == "AMOP"]
    assert (failed["success"] == 0).all()
    assert (failed["relative_error"] == 1.0).all()
    assert failed["error"].str.contains("rank-deficient").all()
    assert result.table[result.table["algorithm"] == "AMOP"]["successes"].iloc[0] == 0


def test_progress_events_carry_fractions():
    events = []
    run_experiment(_small_recovery(trials=2), step_callback=events.append)
    fractions = [e["progress"] for e in events if "progress" in e]
    assert fractions[0] == 0.0 and fractions[-1] == 1.0
    assert fractions == sorted(fractions)
    assert events[-1]["status"] == "done"
    assert all(e["agent"] == "Bench" for e in events)


def test_noiseless_label_round_trip():
    spec = ExperimentSpec.from_dict({"kind": "NoiseSweep", "snr_db": [20, "noiseless"], "sparsity": [4]})
    assert spec.snr_db == [20.0, math.inf]
    assert spec.to_dict()["snr_db"] == [20.0, "noiseless"]
    assert isinstance(spec.ensemble, GaussianEnsemble)

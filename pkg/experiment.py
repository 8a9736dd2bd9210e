"""
Deterministic Monte-Carlo experiment runner.

An ExperimentSpec describes one study; the runner expands it into sweep points,
derives every trial's seeds by hashing, runs all requested algorithms on the
same instance, and folds the trial records (in trial order) into a pandas
table. Identical spec + seed gives identical tables whatever the worker count.
"""

import dataclasses
import hashlib
import json
import logging
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, fields, replace
from typing import Callable, Optional

import numpy as np
import pandas as pd
from dotenv import load_dotenv

from amop import AmopConfig, AmopRecovery
from cosamp import CosampRecovery
from errors import RejectedInputError, SingularityError, SpecError
from metrics import LOG_BASE, dynamic_range_table, exact_recovery, pmin_table, relative_error, support_metrics
from omp import OmpRecovery
from sensing import GaussianEnsemble, SpatialTemporalEnsemble, ensemble_from_dict
from signals import NOISELESS, FIELDS, FlatModel, add_noise, gen_sparse_signal, measure, signal_model_from_dict

load_dotenv()

__version__ = "1.0.0"

logger = logging.getLogger(__name__)

RESULTS_DIR = os.getenv("AMOP_RESULTS_DIR", "results")
BENCH_WORKERS = int(os.getenv("AMOP_BENCH_WORKERS", "1"))

KINDS = ("RecoveryPercentage", "NoiseSweep", "StapSupport", "PminTable", "DynamicRangeCurve")
ANALYSIS_KINDS = ("PminTable", "DynamicRangeCurve")
NOISELESS_LABEL = "noiseless"
DEFAULT_TRIALS = 100

# algorithm name -> factory(cfg, sparsity)
ALGORITHMS = {
    "AMOP": lambda cfg, S: AmopRecovery(cfg),
    "OMP": lambda cfg, S: OmpRecovery(cfg.halt_eps, cfg.max_iters, cfg.lin_dep_tol),
    "CoSaMP": lambda cfg, S: CosampRecovery(S, cfg.halt_eps, cfg.max_iters),
}

RECOVERY_COLUMNS = ["ensemble", "signal_model", "N", "S", "m", "algorithm", "trials", "successes", "percentage"]
NOISE_COLUMNS = ["snr_db", "m", "algorithm", "trials", "median_rel_error", "mean_rel_error", "q10", "q90"]
STAP_COLUMNS = ["tolerance", "algorithm", "mean_hits", "mean_false_alarms"]

AMOP_OVERRIDE_KEYS = {f.name for f in fields(AmopConfig)}


def derive_seed(*parts) -> int:
    """Stable 63-bit seed from the SHA-256 of the '|'-joined parts."""
    digest = hashlib.sha256("|".join(str(p) for p in parts).encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big") >> 1


def snr_label(snr_db: float) -> str:
    return NOISELESS_LABEL if snr_db == NOISELESS else f"{snr_db:.9g}"


def _parse_snr(value) -> float:
    if value == NOISELESS_LABEL or value is None:
        return NOISELESS
    if isinstance(value, bool) or not isinstance(value, (int, float)) or math.isnan(value):
        raise SpecError("snr_db", f"entries must be numbers or {NOISELESS_LABEL!r}, got {value!r}")
    return float(value)


def _int_list(name: str, value, minimum: int = 1) -> list:
    if not isinstance(value, list) or not value:
        raise SpecError(name, "must be a nonempty list")
    for v in value:
        if isinstance(v, bool) or not isinstance(v, int) or v < minimum:
            raise SpecError(name, f"entries must be integers >= {minimum}, got {v!r}")
    return list(value)


@dataclass
class ExperimentSpec:
    """Declarative description of one study. Every field is serialized back out."""

    kind: str
    name: str = "experiment"
    ensemble: object = dataclasses.field(default_factory=GaussianEnsemble)
    signal: object = dataclasses.field(default_factory=FlatModel)
    field: Optional[str] = None
    N: int = 256
    sparsity: list = dataclasses.field(default_factory=lambda: [4])
    m: list = dataclasses.field(default_factory=lambda: [64])
    snr_db: list = dataclasses.field(default_factory=lambda: [NOISELESS])
    trials: int = DEFAULT_TRIALS
    base_seed: int = 0
    algorithms: list = dataclasses.field(default_factory=lambda: ["AMOP", "CoSaMP"])
    amop: dict = dataclasses.field(default_factory=dict)
    exact_tol: float = 1e-6
    tolerances: list = dataclasses.field(default_factory=lambda: [0, 1, 2])
    detect_rel_tol: float = 1e-6
    k_max: int = 20
    thresholds: list = dataclasses.field(default_factory=lambda: [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9])
    s_max: int = 64
    noise_levels: list = dataclasses.field(default_factory=lambda: [0.0, 0.1])
    output: Optional[str] = None

    def __post_init__(self):
        self.validate()

    def validate(self):
        if self.kind not in KINDS:
            raise SpecError("kind", f"must be one of {list(KINDS)}, got {self.kind!r}")
        if not isinstance(self.name, str) or not self.name:
            raise SpecError("name", "must be a nonempty string")
        if isinstance(self.ensemble, dict):
            try:
                self.ensemble = ensemble_from_dict(self.ensemble)
            except RejectedInputError as e:
                raise SpecError("ensemble", str(e)) from e
        if isinstance(self.signal, dict):
            try:
                self.signal = signal_model_from_dict(self.signal)
            except RejectedInputError as e:
                raise SpecError("signal", str(e)) from e
        if self.field is None:
            self.field = "complex" if self.ensemble.is_complex else "real"
        if self.field not in FIELDS:
            raise SpecError("field", f"must be one of {list(FIELDS)}, got {self.field!r}")
        if isinstance(self.trials, bool) or not isinstance(self.trials, int) or self.trials < 1:
            raise SpecError("trials", f"must be an integer >= 1, got {self.trials!r}")
        if isinstance(self.base_seed, bool) or not isinstance(self.base_seed, int):
            raise SpecError("base_seed", f"must be an integer, got {self.base_seed!r}")
        if not self.output:
            self.output = f"{self.name}.csv"

        if self.kind in ANALYSIS_KINDS:
            self._validate_analysis()
            return

        if isinstance(self.ensemble, SpatialTemporalEnsemble):
            if self.kind == "StapSupport":
                self.N, self.m = self.ensemble.cols, [self.ensemble.rows]
            elif self.N != self.ensemble.cols or self.m != [self.ensemble.rows]:
                raise SpecError("m", f"SpatialTemporal ensemble fixes N={self.ensemble.cols}, m=[{self.ensemble.rows}]")
        elif self.kind == "StapSupport":
            raise SpecError("ensemble", "StapSupport needs a SpatialTemporal ensemble")

        if isinstance(self.N, bool) or not isinstance(self.N, int) or self.N < 1:
            raise SpecError("N", f"must be a positive integer, got {self.N!r}")
        self.sparsity = _int_list("sparsity", self.sparsity)
        self.m = _int_list("m", self.m)
        if max(self.sparsity) > self.N:
            raise SpecError("sparsity", f"entries must not exceed N={self.N}")
        if max(self.m) > self.N:
            raise SpecError("m", f"entries must not exceed N={self.N}")
        if not isinstance(self.snr_db, list) or not self.snr_db:
            raise SpecError("snr_db", "must be a nonempty list")
        self.snr_db = [_parse_snr(v) for v in self.snr_db]
        if not isinstance(self.algorithms, list) or not self.algorithms:
            raise SpecError("algorithms", "must be a nonempty list")
        for name in self.algorithms:
            if name not in ALGORITHMS:
                raise SpecError("algorithms", f"unknown algorithm {name!r}; expected a subset of {list(ALGORITHMS)}")
        if len(set(self.algorithms)) != len(self.algorithms):
            raise SpecError("algorithms", "duplicate algorithm names")
        if "CoSaMP" in self.algorithms and 3 * max(self.sparsity) > min(self.m):
            raise SpecError("algorithms", f"CoSaMP needs 3*S <= m; S={max(self.sparsity)} vs m={min(self.m)}")
        if not isinstance(self.amop, dict):
            raise SpecError("amop", "must be an object of AmopConfig overrides")
        unknown = set(self.amop) - AMOP_OVERRIDE_KEYS
        if unknown:
            raise SpecError("amop", f"unknown override key(s) {sorted(unknown)}")
        try:
            self.amop_config(min(self.m), self.snr_db[0])
        except (RejectedInputError, TypeError) as e:
            raise SpecError("amop", str(e)) from e
        if not self.exact_tol > 0:
            raise SpecError("exact_tol", "must be positive")
        self.tolerances = _int_list("tolerances", self.tolerances, minimum=0)
        if not 0 <= self.detect_rel_tol < 1:
            raise SpecError("detect_rel_tol", "must lie in [0, 1)")
        if self.kind in ("NoiseSweep", "StapSupport") and len(self.sparsity) != 1:
            raise SpecError("sparsity", f"{self.kind} takes exactly one sparsity level")
        if self.kind == "StapSupport" and len(self.snr_db) != 1:
            raise SpecError("snr_db", "StapSupport takes exactly one SNR")

    def _validate_analysis(self):
        if self.kind == "PminTable":
            if isinstance(self.k_max, bool) or not isinstance(self.k_max, int) or self.k_max < 1:
                raise SpecError("k_max", "must be an integer >= 1")
            if not self.thresholds or any(not 0 < float(t) <= 1 for t in self.thresholds):
                raise SpecError("thresholds", "must be a nonempty list of values in (0, 1]")
        else:
            if isinstance(self.s_max, bool) or not isinstance(self.s_max, int) or self.s_max < 2:
                raise SpecError("s_max", "must be an integer >= 2")
            if not self.noise_levels or any(float(e) < 0 for e in self.noise_levels):
                raise SpecError("noise_levels", "must be a nonempty list of nonnegative values")

    def amop_config(self, m: int, snr_db: float) -> AmopConfig:
        return AmopConfig.for_measurements(m, snr_db, **self.amop)

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentSpec":
        if not isinstance(data, dict):
            raise SpecError("<root>", "experiment spec must be a JSON object")
        known = {f.name for f in fields(cls)}
        for key in data:
            if key not in known:
                raise SpecError(key, "unknown key")
        if "kind" not in data:
            raise SpecError("kind", "missing")
        return cls(**data)

    @classmethod
    def load(cls, path: str) -> "ExperimentSpec":
        try:
            with open(path, "r") as f:
                data = json.load(f)
        except json.JSONDecodeError as e:
            raise SpecError("<root>", f"invalid JSON in {path}: {e}") from e
        return cls.from_dict(data)

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "name": self.name,
            "ensemble": self.ensemble.to_dict(),
            "signal": self.signal.to_dict(),
            "field": self.field,
            "N": self.N,
            "sparsity": list(self.sparsity),
            "m": list(self.m),
            "snr_db": [NOISELESS_LABEL if s == NOISELESS else s for s in self.snr_db],
            "trials": self.trials,
            "base_seed": self.base_seed,
            "algorithms": list(self.algorithms),
            "amop": dict(self.amop),
            "exact_tol": self.exact_tol,
            "tolerances": list(self.tolerances),
            "detect_rel_tol": self.detect_rel_tol,
            "k_max": self.k_max,
            "thresholds": list(self.thresholds),
            "s_max": self.s_max,
            "noise_levels": list(self.noise_levels),
            "output": self.output,
        }

    def with_seed(self, base_seed: int) -> "ExperimentSpec":
        return replace(self, base_seed=int(base_seed))


@dataclass
class TrialRecord:
    trial: int
    seed: int
    algorithm: str
    m: int
    S: int
    snr_db: float
    success: bool
    relative_error: float
    iterations: int
    halt_reason: str
    wall_time_ms: float
    support_metrics: dict = field(default_factory=dict)
    error: str = ""

    def to_row(self) -> dict:
        row = {
            "m": self.m,
            "S": self.S,
            "snr_db": snr_label(self.snr_db),
            "trial": self.trial,
            "seed": self.seed,
            "algorithm": self.algorithm,
            "success": int(self.success),
            "relative_error": self.relative_error,
            "iterations": self.iterations,
            "halt_reason": self.halt_reason,
        }
        for tol, sm in sorted(self.support_metrics.items()):
            row[f"hits_tol{tol}"] = sm.hits
            row[f"false_alarms_tol{tol}"] = sm.false_alarms
        row["error"] = self.error
        row["wall_time_ms"] = self.wall_time_ms
        return row


@dataclass
class ExperimentResult:
    spec: ExperimentSpec
    table: pd.DataFrame
    trials: Optional[pd.DataFrame] = None
    metadata: dict = field(default_factory=dict)


class ExperimentRunner:
    """Runs one ExperimentSpec, reporting progress like the recovery agents do."""

    name = "Bench"

    def __init__(self, spec: ExperimentSpec, step_callback: Optional[Callable[[dict], None]] = None, workers: Optional[int] = None):
        self.spec = spec
        self.step_callback = step_callback
        self.workers = max(1, workers if workers is not None else BENCH_WORKERS)
        self._stap_matrix = None

    def _step(self, icon, title, detail="", status="running", progress=None):
        msg = f"{icon} [{self.name}] {title}"
        if detail:
            msg += f" - {detail}"
        logger.info(msg)
        if self.step_callback:
            event = {"agent": self.name, "icon": icon, "title": title, "detail": detail, "status": status}
            if progress is not None:
                event["progress"] = progress
            self.step_callback(event)

    def _matrix(self, m: int, seed: int) -> np.ndarray:
        ensemble = self.spec.ensemble
        if isinstance(ensemble, SpatialTemporalEnsemble):
            if self._stap_matrix is None:
                self._stap_matrix = ensemble.generate(m, self.spec.N)
            return self._stap_matrix
        return ensemble.generate(m, self.spec.N, seed)

    def _run_instance(self, m: int, S: int, snr_db: float, trial: int) -> list:
        spec = self.spec
        point = f"m={m}|S={S}|snr={snr_label(snr_db)}"
        instance_seed = derive_seed(spec.base_seed, point, trial)
        A = self._matrix(m, derive_seed(instance_seed, "matrix"))
        x = gen_sparse_signal(spec.N, S, spec.signal, derive_seed(instance_seed, "signal"), field=spec.field)
        y = add_noise(measure(A, x), snr_db, derive_seed(instance_seed, "noise"))
        cfg = spec.amop_config(m, snr_db)
        grid = spec.ensemble.grid if isinstance(spec.ensemble, SpatialTemporalEnsemble) else None

        records = []
        for algorithm in spec.algorithms:
            seed = derive_seed(spec.base_seed, point, trial, algorithm)
            try:
                result = ALGORITHMS[algorithm](cfg, S).recover(A, y)
            except (np.linalg.LinAlgError, SingularityError) as e:
                logger.warning("trial %d (%s, %s) failed numerically: %s", trial, algorithm, point, e)
                records.append(TrialRecord(
                    trial=trial, seed=seed, algorithm=algorithm, m=m, S=S, snr_db=snr_db,
                    success=False, relative_error=1.0, iterations=0, halt_reason="Error",
                    wall_time_ms=0.0, error=str(e),
                ))
                continue
            err = relative_error(x, result.estimate)
            metrics = {}
            if spec.kind == "StapSupport":
                detected = result.estimate.significant_support(spec.detect_rel_tol)
                metrics = {tol: support_metrics(x.support, detected, grid=grid, tolerance=tol) for tol in spec.tolerances}
            records.append(TrialRecord(
                trial=trial, seed=seed, algorithm=algorithm, m=m, S=S, snr_db=snr_db,
                success=exact_recovery(x, result.estimate, spec.exact_tol), relative_error=err, iterations=result.iterations,
                halt_reason=result.halt_reason.value, wall_time_ms=result.wall_time_ms,
                support_metrics=metrics,
            ))
        return records

    def _sweep(self) -> list:
        """All trial records, ordered by sweep point, then trial index, then algorithm."""
        spec = self.spec
        points = [(snr, m, S) for snr in spec.snr_db for m in spec.m for S in spec.sparsity]
        records = []
        with ThreadPoolExecutor(max_workers=self.workers) as pool:
            for i, (snr, m, S) in enumerate(points):
                self._step("~", f"Sweep point {i + 1}/{len(points)}",
                           f"m={m}, S={S}, snr={snr_label(snr)}, {spec.trials} trial(s)",
                           progress=i / len(points))
                batches = pool.map(lambda t: self._run_instance(m, S, snr, t), range(spec.trials))
                for batch in batches:
                    records.extend(batch)
        return records

    def _records_frame(self, records: list) -> pd.DataFrame:
        return pd.DataFrame([r.to_row() for r in records])

    def run_recovery_percentage(self) -> ExperimentResult:
        spec = self._require("RecoveryPercentage")
        records = self._sweep()
        rows = []
        for snr in spec.snr_db:
            for m in spec.m:
                for S in spec.sparsity:
                    for algorithm in spec.algorithms:
                        group = [r for r in records if (r.snr_db, r.m, r.S, r.algorithm) == (snr, m, S, algorithm)]
                        successes = sum(r.success for r in group)
                        rows.append({
                            "ensemble": spec.ensemble.kind,
                            "signal_model": spec.signal.kind,
                            "N": spec.N,
                            "S": S,
                            "m": m,
                            "algorithm": algorithm,
                            "trials": len(group),
                            "successes": successes,
                            "percentage": 100.0 * successes / len(group),
                        })
        return self._finish(pd.DataFrame(rows, columns=RECOVERY_COLUMNS), records)

    def run_noise_sweep(self) -> ExperimentResult:
        spec = self._require("NoiseSweep")
        records = self._sweep()
        rows = []
        for snr in spec.snr_db:
            for m in spec.m:
                for algorithm in spec.algorithms:
                    errors = np.array([r.relative_error for r in records if (r.snr_db, r.m, r.algorithm) == (snr, m, algorithm)])
                    q10, q90 = np.quantile(errors, [0.1, 0.9])
                    rows.append({
                        "snr_db": snr_label(snr),
                        "m": m,
                        "algorithm": algorithm,
                        "trials": errors.size,
                        "median_rel_error": float(np.median(errors)),
                        "mean_rel_error": float(np.mean(errors)),
                        "q10": float(q10),
                        "q90": float(q90),
                    })
        return self._finish(pd.DataFrame(rows, columns=NOISE_COLUMNS), records)

    def run_stap_support(self) -> ExperimentResult:
        spec = self._require("StapSupport")
        records = self._sweep()
        rows = []
        for tol in spec.tolerances:
            for algorithm in spec.algorithms:
                group = [r for r in records if r.algorithm == algorithm]
                # numerically failed trials detect nothing
                hits = [r.support_metrics[tol].hits if r.support_metrics else 0 for r in group]
                alarms = [r.support_metrics[tol].false_alarms if r.support_metrics else 0 for r in group]
                rows.append({
                    "tolerance": tol,
                    "algorithm": algorithm,
                    "mean_hits": float(np.mean(hits)),
                    "mean_false_alarms": float(np.mean(alarms)),
                })
        return self._finish(pd.DataFrame(rows, columns=STAP_COLUMNS), records)

    def emit_analysis_tables(self) -> ExperimentResult:
        spec = self.spec
        if spec.kind == "PminTable":
            table = pmin_table(spec.k_max, spec.thresholds)
            metadata = {}
        elif spec.kind == "DynamicRangeCurve":
            table = dynamic_range_table(spec.s_max, spec.noise_levels)
            metadata = {"log_base": LOG_BASE}
        else:
            raise SpecError("kind", f"analysis tables need PminTable or DynamicRangeCurve, got {spec.kind}")
        self._step("+", "Analysis table ready", f"{len(table)} row(s)", "done", progress=1.0)
        return ExperimentResult(spec=spec, table=table, metadata=metadata)

    def run(self) -> ExperimentResult:
        dispatch = {
            "RecoveryPercentage": self.run_recovery_percentage,
            "NoiseSweep": self.run_noise_sweep,
            "StapSupport": self.run_stap_support,
            "PminTable": self.emit_analysis_tables,
            "DynamicRangeCurve": self.emit_analysis_tables,
        }
        self._step(">", f"Experiment '{self.spec.name}' started", self.spec.kind)
        return dispatch[self.spec.kind]()

    def _require(self, kind: str) -> ExperimentSpec:
        if self.spec.kind != kind:
            raise SpecError("kind", f"runner expects {kind}, spec has {self.spec.kind}")
        return self.spec

    def _finish(self, table: pd.DataFrame, records: list) -> ExperimentResult:
        self._step("+", "Experiment finished", f"{len(table)} row(s), {len(records)} trial record(s)", "done", progress=1.0)
        metadata = {}
        if "AMOP" in self.spec.algorithms:
            for snr in self.spec.snr_db:
                for m in self.spec.m:
                    cfg = self.spec.amop_config(m, snr).to_dict()
                    metadata[f"amop[m={m}|snr={snr_label(snr)}]"] = json.dumps(cfg, sort_keys=True)
        return ExperimentResult(spec=self.spec, table=table, trials=self._records_frame(records), metadata=metadata)


def run_recovery_percentage(spec: ExperimentSpec, step_callback=None) -> ExperimentResult:
    return ExperimentRunner(spec, step_callback).run_recovery_percentage()


def run_noise_sweep(spec: ExperimentSpec, step_callback=None) -> ExperimentResult:
    return ExperimentRunner(spec, step_callback).run_noise_sweep()


def run_stap_support(spec: ExperimentSpec, step_callback=None) -> ExperimentResult:
    return ExperimentRunner(spec, step_callback).run_stap_support()


def emit_analysis_tables(spec: ExperimentSpec, step_callback=None) -> ExperimentResult:
    return ExperimentRunner(spec, step_callback).emit_analysis_tables()


def run_experiment(spec: ExperimentSpec, step_callback=None, workers: Optional[int] = None) -> ExperimentResult:
    return ExperimentRunner(spec, step_callback, workers).run()

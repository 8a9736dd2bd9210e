"""
Closed-form analysis quantities and the evaluation metrics of the benchmarks.
"""

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
import pandas as pd

from errors import RejectedInputError
from recovery_base import RankedProxy
from sensing import stap_cell
from signals import SparseSignal

# energy share a regularized selection step is guaranteed to lock per pass
ROMP_ENERGY_GUARANTEE = 0.5
LOG_BASE = "ln"


def p_min(K: int, T: float) -> float:
    """Lower bound on the energy fraction captured by the adaptive selection."""
    if K < 1:
        raise RejectedInputError(f"K must be positive, got {K}")
    if not 0 < T <= 1:
        raise RejectedInputError(f"T must lie in (0, 1], got {T}")
    return 1.0 / (1.0 + (K - 1) * (1.0 - T) ** 2)


def energy_fraction(ranked: RankedProxy, k: int, K: int) -> float:
    mags = np.asarray(ranked.magnitudes, dtype=float)
    if not 1 <= k <= K <= mags.size:
        raise RejectedInputError(f"need 1 <= k <= K <= {mags.size}, got k={k}, K={K}")
    energy = mags[:K] ** 2
    total = energy.sum()
    if total == 0:
        raise RejectedInputError("energy fraction is undefined for all-zero magnitudes")
    return float(energy[:k].sum() / total)


def recovery_condition(x0: SparseSignal, delta_k: float, noise_bound: float) -> bool:
    """Sufficient condition for every AMOP selection to stay inside the true support.

    With K = 2 * sparsity: min|x| >= 2 (noise_bound + delta/(1-delta) * sqrt(K/2) * max|x|).
    """
    if not x0.sparsity():
        raise RejectedInputError("recovery condition needs a nonempty support")
    if not 0 <= delta_k < 1:
        raise RejectedInputError(f"delta_k must lie in [0, 1), got {delta_k}")
    mags = np.abs(x0.values)
    K = 2 * x0.sparsity()
    bound = 2.0 * (noise_bound + delta_k / (1.0 - delta_k) * math.sqrt(K / 2) * mags.max())
    return bool(mags.min() >= bound)


def dynamic_range_curve(s: int, noise_bound: float) -> float:
    """Smallest admissible element magnitude (largest normalized to 1) at sparsity ``s``."""
    if s < 2:
        raise RejectedInputError(f"s must be at least 2, got {s}")
    return 0.06 * math.sqrt(s) / (math.sqrt(math.log(s)) - 0.03) + 2.0 * noise_bound


def relative_error(x_true: SparseSignal, x_est: SparseSignal) -> float:
    if x_true.ambient_dim != x_est.ambient_dim:
        raise RejectedInputError(f"ambient dims differ: {x_true.ambient_dim} vs {x_est.ambient_dim}")
    true_norm = np.linalg.norm(x_true.values)
    if true_norm == 0:
        raise RejectedInputError("relative error is undefined for a zero reference signal")
    return float(np.linalg.norm(x_true.to_dense() - x_est.to_dense()) / true_norm)


def exact_recovery(x_true: SparseSignal, x_est: SparseSignal, tol: float = 1e-6) -> bool:
    return relative_error(x_true, x_est) < tol


@dataclass(frozen=True)
class SupportMetrics:
    tolerance: int
    hits: int
    misses: int
    false_alarms: int


def _distances(true_idx: np.ndarray, est_idx: np.ndarray, grid: Optional[tuple]) -> np.ndarray:
    if grid is None:
        return np.abs(true_idx[:, None] - est_idx[None, :])
    true_cells = np.array([stap_cell(i, grid[1]) for i in true_idx], dtype=np.intp).reshape(-1, 2)
    est_cells = np.array([stap_cell(i, grid[1]) for i in est_idx], dtype=np.intp).reshape(-1, 2)
    return np.abs(true_cells[:, None, :] - est_cells[None, :, :]).max(axis=2)


def support_metrics(true_support, est_support, grid: Optional[tuple] = None, tolerance: int = 0) -> SupportMetrics:
    """Greedy nearest-first one-to-one matching within ``tolerance``.

    With a grid, distance is Chebyshev on (spatial, Doppler) cells, so all eight
    neighbours sit at distance 1; without one it is |i - j|.
    """
    if tolerance < 0:
        raise RejectedInputError("tolerance must be nonnegative")
    if grid is not None:
        if len(grid) != 2 or min(grid) < 1:
            raise RejectedInputError(f"grid must be (spatial_grid, doppler_grid) positive, got {grid}")
        cells = grid[0] * grid[1]
    true_idx = np.unique(np.asarray(true_support, dtype=np.intp))
    est_idx = np.unique(np.asarray(est_support, dtype=np.intp))
    if grid is not None and (np.any(true_idx >= cells) or np.any(est_idx >= cells)):
        raise RejectedInputError(f"support index outside the {grid[0]}x{grid[1]} grid")

    hits = 0
    if true_idx.size and est_idx.size:
        dist = _distances(true_idx, est_idx, grid)
        ti, ei = np.nonzero(dist <= tolerance)
        order = np.lexsort((ei, ti, dist[ti, ei]))
        used_true, used_est = set(), set()
        for t, e in zip(ti[order], ei[order]):
            if t in used_true or e in used_est:
                continue
            used_true.add(t)
            used_est.add(e)
        hits = len(used_true)
    return SupportMetrics(
        tolerance=tolerance,
        hits=hits,
        misses=int(true_idx.size) - hits,
        false_alarms=int(est_idx.size) - hits,
    )


def support_subset_holds(support_history, true_support) -> bool:
    """Every recorded support up to the first one covering ``true_support`` lies inside it."""
    truth = set(int(j) for j in true_support)
    for omega in support_history:
        omega = set(int(j) for j in omega)
        if not omega <= truth:
            return False
        if truth <= omega:
            break
    return True


def threshold_column(T: float) -> str:
    return f"T={T:g}"


def noise_column(noise_bound: float) -> str:
    return f"noise={noise_bound:g}"


def pmin_table(k_max: int, thresholds) -> pd.DataFrame:
    """One row per K, one p_min column per threshold, plus the ROMP reference level."""
    if k_max < 1 or not len(thresholds):
        raise RejectedInputError("pmin table needs k_max >= 1 and at least one threshold")
    table = pd.DataFrame({"K": np.arange(1, k_max + 1)})
    for T in thresholds:
        table[threshold_column(float(T))] = [p_min(int(K), float(T)) for K in table["K"]]
    table["romp_guarantee"] = ROMP_ENERGY_GUARANTEE
    return table


def dynamic_range_table(s_max: int, noise_levels) -> pd.DataFrame:
    """One row per sparsity s >= 2, one minimum-element-norm column per noise bound."""
    if s_max < 2 or not len(noise_levels):
        raise RejectedInputError("dynamic range table needs s_max >= 2 and at least one noise level")
    table = pd.DataFrame({"s": np.arange(2, s_max + 1)})
    for eps in noise_levels:
        table[noise_column(float(eps))] = [dynamic_range_curve(int(s), float(eps)) for s in table["s"]]
    return table

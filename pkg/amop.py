"""
Adaptive orthogonal matching pursuit.

Each pass ranks the proxy u = Phi^H r, picks how many of the top coordinates
to accept from the largest relative drop between neighbours (with the
threshold relaxed by beta when the drop lies beyond the per-iteration cap),
grows the incremental QR, and re-solves least squares over the whole support.
"""

import logging
import math
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from errors import ProxyInvariantError, RejectedInputError
from linalg import LIN_DEP_TOL, IncrementalQR, adjoint_matvec, as_vector
from recovery_base import (
    HaltReason,
    RankedProxy,
    RecoveryBase,
    RecoveryResult,
    SelectionTrace,
    estimate_from_coefficients,
)
from signals import NOISELESS

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class AmopConfig:
    threshold: float = 0.3
    halt_eps: float = 1e-6
    cap_k: int = 16
    beta_floor: float = 0.1
    beta_decay: float = 0.9
    max_iters: int = 256
    lin_dep_tol: float = LIN_DEP_TOL
    fixed_k: Optional[int] = None

    def __post_init__(self):
        if not 0 < self.threshold < 1:
            raise RejectedInputError(f"threshold must lie in (0, 1), got {self.threshold}")
        if not self.halt_eps > 0:
            raise RejectedInputError(f"halt_eps must be positive, got {self.halt_eps}")
        if self.cap_k < 1:
            raise RejectedInputError(f"cap_k must be positive, got {self.cap_k}")
        if not 0 < self.beta_floor < 1:
            raise RejectedInputError(f"beta_floor must lie in (0, 1), got {self.beta_floor}")
        if not 0 < self.beta_decay < 1:
            raise RejectedInputError(f"beta_decay must lie in (0, 1), got {self.beta_decay}")
        if self.max_iters < 1:
            raise RejectedInputError(f"max_iters must be positive, got {self.max_iters}")
        if self.lin_dep_tol < 0:
            raise RejectedInputError(f"lin_dep_tol must be nonnegative, got {self.lin_dep_tol}")
        if self.fixed_k is not None and self.fixed_k < 1:
            raise RejectedInputError(f"fixed_k must be positive when set, got {self.fixed_k}")

    @classmethod
    def for_measurements(cls, m: int, snr_db: float = NOISELESS, **overrides) -> "AmopConfig":
        """Benchmark defaults: T=0.3, eps from the SNR, K=max(2, m/10), max_iters=m."""
        halt_eps = 1e-6 if snr_db == NOISELESS else 10.0 ** (-snr_db / 20.0)
        base = cls(halt_eps=halt_eps, cap_k=max(2, m // 10), max_iters=m)
        return replace(base, **overrides) if overrides else base

    def to_dict(self) -> dict:
        return {
            "threshold": self.threshold,
            "halt_eps": self.halt_eps,
            "cap_k": self.cap_k,
            "beta_floor": self.beta_floor,
            "beta_decay": self.beta_decay,
            "max_iters": self.max_iters,
            "lin_dep_tol": self.lin_dep_tol,
            "fixed_k": self.fixed_k,
        }


def rank_proxy(u, exclude=None) -> RankedProxy:
    """Sort |u| descending, ties by ascending index; ``exclude`` coordinates rank as zero."""
    mags = np.abs(as_vector(u))
    if exclude is not None:
        mags[np.asarray(exclude)] = 0.0
    perm = np.argsort(-mags, kind="stable")
    return RankedProxy(magnitudes=mags[perm], perm=perm)


def relative_drops(magnitudes: np.ndarray) -> np.ndarray:
    """(m[i-1] - m[i]) / m[i-1] for each adjacent pair; zero where m[i-1] is zero."""
    prev, nxt = magnitudes[:-1], magnitudes[1:]
    drops = np.zeros(prev.shape)
    positive = prev > 0
    drops[positive] = (prev[positive] - nxt[positive]) / prev[positive]
    return drops


def _select(ranked: RankedProxy, cfg: AmopConfig, remaining_budget: int) -> SelectionTrace:
    mags = ranked.magnitudes
    if mags.size == 0 or not mags[0] > 0:
        raise ProxyInvariantError("select_k needs at least one strictly positive magnitude")
    if remaining_budget < 1:
        raise RejectedInputError("remaining_budget must be positive")
    nonzero = int(np.count_nonzero(mags))
    drops = relative_drops(mags)
    beta = 1.0
    while True:
        hits = np.flatnonzero(drops > cfg.threshold * beta)
        k = int(hits[0]) + 1 if hits.size else None
        if k is not None and k <= cfg.cap_k:
            rule = "drop"
            break
        if beta < cfg.beta_floor:
            if k is None:
                k, rule = 1, "fallback"
            else:
                k, rule = cfg.cap_k, "cap"
            break
        beta *= cfg.beta_decay
    return SelectionTrace(k=min(k, remaining_budget), beta=beta, rule=rule, nonzero=nonzero)


def select_k(ranked: RankedProxy, cfg: AmopConfig, remaining_budget: int) -> int:
    return _select(ranked, cfg, remaining_budget).k


class AmopRecovery(RecoveryBase):
    name = "AMOP"

    def __init__(self, cfg: AmopConfig, step_callback=None):
        super().__init__(step_callback)
        self.cfg = cfg

    def _selection(self, ranked: RankedProxy, budget: int) -> SelectionTrace:
        if self.cfg.fixed_k is not None:
            return SelectionTrace(
                k=min(self.cfg.fixed_k, budget), beta=1.0, rule="fixed", nonzero=int(np.count_nonzero(ranked.magnitudes))
            )
        return _select(ranked, self.cfg, budget)

    def _run(self, A: np.ndarray, y: np.ndarray, y_norm: float) -> RecoveryResult:
        cfg = self.cfg
        m, N = A.shape
        qr = IncrementalQR(m, cfg.lin_dep_tol, dtype=np.result_type(A.dtype, y.dtype))
        considered = np.zeros(N, dtype=bool)
        coeffs = np.zeros(0, dtype=qr.dtype)
        r = y.copy()
        history, support_history, selections = [], [], []
        halt = HaltReason.MAX_ITERS
        max_support = m - 1

        for it in range(cfg.max_iters):
            budget = max_support - len(qr)
            if budget < 1:
                halt = HaltReason.SUPPORT_FULL
                break
            ranked = rank_proxy(adjoint_matvec(A, r), exclude=considered)
            if not ranked.magnitudes[0] > 0:
                halt = HaltReason.PROXY_EXHAUSTED
                break
            trace = self._selection(ranked, budget)
            chosen = ranked.perm[: trace.k]
            rejected = qr.extend(A, chosen)
            considered[chosen] = True
            if rejected:
                logger.debug("iteration %d: %d dependent column(s) rejected", it, len(rejected))

            coeffs = qr.solve(y)
            r = y - A[:, qr.selected] @ coeffs
            rel = float(np.linalg.norm(r)) / y_norm
            history.append(rel)
            support_history.append(tuple(qr.selected))
            selections.append(trace)
            self._step(".", f"Iteration {it + 1}", f"k={trace.k} ({trace.rule}), |r|/|y|={rel:.3e}")

            if rel < cfg.halt_eps:
                halt = HaltReason.CONVERGED
                break
            if len(qr) >= max_support:
                halt = HaltReason.SUPPORT_FULL
                break

        return RecoveryResult(
            estimate=estimate_from_coefficients(N, qr.selected, coeffs),
            support=list(qr.selected),
            iterations=len(history),
            residual_history=history,
            halt_reason=halt,
            support_history=support_history,
            selections=selections,
        )


def amop(A, y, cfg: AmopConfig, step_callback=None) -> RecoveryResult:
    return AmopRecovery(cfg, step_callback=step_callback).recover(A, y)

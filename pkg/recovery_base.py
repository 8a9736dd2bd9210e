"""
Shared types and the base class for greedy sparse-recovery algorithms.

Every solver follows the same outer process:
1. validate A and y, short-circuit a zero measurement
2. run the algorithm-specific loop (``_run``)
3. report step events to an optional callback and to the log
"""

import enum
import logging
import time
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from errors import RejectedInputError
from linalg import as_matrix, as_vector
from signals import SparseSignal

logger = logging.getLogger(__name__)

StepCallback = Callable[[dict], None]


class HaltReason(enum.Enum):
    CONVERGED = "Converged"
    MAX_ITERS = "MaxIters"
    SUPPORT_FULL = "SupportFull"
    ZERO_MEASUREMENT = "ZeroMeasurement"
    STAGNATED = "Stagnated"
    PROXY_EXHAUSTED = "ProxyExhausted"


@dataclass(frozen=True)
class RankedProxy:
    """Proxy magnitudes sorted nonincreasing; ``perm[i]`` is the coordinate at rank i."""

    magnitudes: np.ndarray
    perm: np.ndarray

    def __len__(self) -> int:
        return int(self.magnitudes.size)


@dataclass(frozen=True)
class SelectionTrace:
    k: int
    beta: float
    rule: str  # "drop" | "cap" | "fallback" | "fixed"
    nonzero: int


@dataclass
class RecoveryResult:
    estimate: SparseSignal
    support: list
    iterations: int
    residual_history: list
    halt_reason: HaltReason
    support_history: list = field(default_factory=list)
    selections: list = field(default_factory=list)
    wall_time_ms: float = 0.0

    @property
    def converged(self) -> bool:
        return self.halt_reason is HaltReason.CONVERGED


def estimate_from_coefficients(N: int, indices, coeffs) -> SparseSignal:
    """Sparse estimate from LS coefficients over ``indices`` (any order); exact zeros dropped."""
    indices = np.asarray(indices, dtype=np.intp)
    coeffs = np.asarray(coeffs)
    keep = coeffs != 0
    order = np.argsort(indices[keep])
    return SparseSignal(ambient_dim=N, support=indices[keep][order], values=coeffs[keep][order])


class RecoveryBase:
    """Base class for all recovery algorithms."""

    name: str = "base"

    def __init__(self, step_callback: Optional[StepCallback] = None):
        self.step_callback = step_callback

    def _step(self, icon: str, title: str, detail: str = "", status: str = "running"):
        """Fire a structured step event to the log and any registered callback."""
        msg = f"{icon} [{self.name}] {title}"
        if detail:
            msg += f" - {detail}"
        logger.debug(msg)
        if self.step_callback:
            self.step_callback({
                "agent": self.name,
                "icon": icon,
                "title": title,
                "detail": detail,
                "status": status,   # "running" | "done" | "error" | "warn"
            })

    def _run(self, A: np.ndarray, y: np.ndarray, y_norm: float) -> RecoveryResult:
        raise NotImplementedError

    def recover(self, A, y) -> RecoveryResult:
        A, y = as_matrix(A), as_vector(y)
        if y.shape[0] != A.shape[0]:
            raise RejectedInputError(f"y has length {y.shape[0]}, A has {A.shape[0]} rows")
        started = time.perf_counter()
        y_norm = float(np.linalg.norm(y))
        if y_norm == 0:
            self._step(">", "Zero measurement", "returning the zero estimate", "warn")
            result = RecoveryResult(
                estimate=SparseSignal.empty(A.shape[1], np.result_type(A.dtype, y.dtype)),
                support=[],
                iterations=0,
                residual_history=[],
                halt_reason=HaltReason.ZERO_MEASUREMENT,
            )
        else:
            self._step(">", "Recovery started", f"{A.shape[0]}x{A.shape[1]} system")
            try:
                result = self._run(A, y, y_norm)
            except Exception as e:
                self._step("x", "Recovery failed", str(e), "error")
                raise
            self._step(
                "+",
                "Recovery finished",
                f"{result.halt_reason.value} after {result.iterations} iteration(s), |support|={len(result.support)}",
                "done",
            )
        result.wall_time_ms = (time.perf_counter() - started) * 1e3
        return result

"""
Compressive sampling matching pursuit, the fixed-sparsity baseline.

The merged candidate set shrinks again after pruning, so each pass re-solves
least squares from scratch instead of updating a QR.
"""

import logging

import numpy as np

from errors import RejectedInputError
from linalg import adjoint_matvec, lstsq_min_norm
from recovery_base import HaltReason, RecoveryBase, RecoveryResult, estimate_from_coefficients

logger = logging.getLogger(__name__)

STAGNATION_TOL = 1e-7
STAGNATION_PATIENCE = 3


def _top(magnitudes: np.ndarray, count: int) -> np.ndarray:
    return np.argsort(-magnitudes, kind="stable")[:count]


class CosampRecovery(RecoveryBase):
    name = "CoSaMP"

    def __init__(self, sparsity: int, halt_eps: float, max_iters: int, step_callback=None):
        super().__init__(step_callback)
        if sparsity < 1:
            raise RejectedInputError(f"sparsity must be positive, got {sparsity}")
        if halt_eps <= 0 or max_iters < 1:
            raise RejectedInputError("halt_eps must be positive and max_iters at least 1")
        self.sparsity = int(sparsity)
        self.halt_eps = float(halt_eps)
        self.max_iters = int(max_iters)

    def _run(self, A: np.ndarray, y: np.ndarray, y_norm: float) -> RecoveryResult:
        m, N = A.shape
        s = self.sparsity
        if 3 * s > m:
            raise RejectedInputError(f"3s = {3 * s} exceeds the {m} measurements; merged least squares is under-determined")

        support = np.zeros(0, dtype=np.intp)
        coeffs = np.zeros(0, dtype=np.result_type(A.dtype, y.dtype))
        r = y
        history, support_history = [], []
        halt = HaltReason.MAX_ITERS
        previous, stagnant = 1.0, 0

        for it in range(self.max_iters):
            u = adjoint_matvec(A, r)
            merged = np.union1d(support, _top(np.abs(u), 2 * s))
            b = lstsq_min_norm(A[:, merged], y)
            keep = np.sort(_top(np.abs(b), s))
            keep = keep[b[keep] != 0]
            support, coeffs = merged[keep], b[keep]
            r = y - A[:, support] @ coeffs
            rel = float(np.linalg.norm(r)) / y_norm
            history.append(rel)
            support_history.append(tuple(int(j) for j in support))
            self._step(".", f"Iteration {it + 1}", f"|merged|={merged.size}, |r|/|y|={rel:.3e}")

            if rel < self.halt_eps:
                halt = HaltReason.CONVERGED
                break
            stagnant = stagnant + 1 if previous - rel < STAGNATION_TOL else 0
            if stagnant >= STAGNATION_PATIENCE:
                halt = HaltReason.STAGNATED
                break
            previous = rel

        return RecoveryResult(
            estimate=estimate_from_coefficients(N, support, coeffs),
            support=[int(j) for j in support],
            iterations=len(history),
            residual_history=history,
            halt_reason=halt,
            support_history=support_history,
        )


def cosamp(A, y, s: int, halt_eps: float, max_iters: int, step_callback=None) -> RecoveryResult:
    return CosampRecovery(s, halt_eps, max_iters, step_callback=step_callback).recover(A, y)

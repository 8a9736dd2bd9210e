from amop import AmopConfig, AmopRecovery
from linalg import LIN_DEP_TOL


class OmpRecovery(AmopRecovery):
    """Orthogonal matching pursuit: the AMOP loop with exactly one new coordinate per pass."""

    name = "OMP"

    def __init__(self, halt_eps: float, max_iters: int, lin_dep_tol: float = LIN_DEP_TOL, step_callback=None):
        cfg = AmopConfig(halt_eps=halt_eps, max_iters=max_iters, lin_dep_tol=lin_dep_tol, fixed_k=1)
        super().__init__(cfg, step_callback=step_callback)


def omp(A, y, halt_eps: float, max_iters: int, step_callback=None):
    return OmpRecovery(halt_eps, max_iters, step_callback=step_callback).recover(A, y)

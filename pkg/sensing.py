"""
Measurement ensembles and a brute-force restricted-isometry oracle.

Every generator is a pure function of its parameters and seed. Gaussian and
Bernoulli entries carry variance 1/m so columns have unit norm in expectation;
Fourier and spatial-temporal columns have unit norm exactly.
"""

import itertools
import logging
import math
from dataclasses import asdict, dataclass
from typing import ClassVar, Optional, Union

import numpy as np
import scipy.linalg

from errors import RejectedInputError

logger = logging.getLogger(__name__)

RIC_SUBSET_LIMIT = 10**6
_RIC_CHUNK = 20000


def _check_size(m: int, N: int):
    if m < 1 or N < 1:
        raise RejectedInputError(f"matrix size must be positive, got {m}x{N}")
    if m > N:
        raise RejectedInputError(f"m={m} > N={N}: over-determined regime is not generated")


def gen_gaussian(m: int, N: int, seed: int) -> np.ndarray:
    _check_size(m, N)
    rng = np.random.default_rng(seed)
    return np.asfortranarray(rng.standard_normal((m, N)) / math.sqrt(m))


def gen_bernoulli(m: int, N: int, seed: int) -> np.ndarray:
    _check_size(m, N)
    rng = np.random.default_rng(seed)
    signs = 2.0 * rng.integers(0, 2, size=(m, N)) - 1.0
    return np.asfortranarray(signs / math.sqrt(m))


def gen_fourier(m: int, N: int, seed: int) -> np.ndarray:
    """m rows of the unitary N-point DFT, drawn without replacement, rescaled by sqrt(N/m)."""
    _check_size(m, N)
    rng = np.random.default_rng(seed)
    rows = np.sort(rng.choice(N, size=m, replace=False))
    dft = scipy.linalg.dft(N, scale="sqrtn")
    return np.asfortranarray(dft[rows] * math.sqrt(N / m))


def stap_index(a: int, b: int, doppler_grid: int) -> int:
    """Column index of spatial bin ``a`` and Doppler bin ``b`` (row-major over (a, b))."""
    return a * doppler_grid + b


def stap_cell(index: int, doppler_grid: int) -> tuple[int, int]:
    return divmod(int(index), doppler_grid)


def gen_stap(n_elements: int, n_pulses: int, spatial_grid: int, doppler_grid: int) -> np.ndarray:
    """Spatial-temporal steering dictionary.

    Column ``stap_index(a, b)`` is the steering vector at f_s = a/spatial_grid,
    f_d = b/doppler_grid; row ``p*n_pulses + q`` holds exp(j2pi(p f_s + q f_d)),
    divided by sqrt(n_elements * n_pulses).
    """
    if min(n_elements, n_pulses, spatial_grid, doppler_grid) < 1:
        raise RejectedInputError("all STAP dimensions must be >= 1")
    f_s = np.arange(spatial_grid) / spatial_grid
    f_d = np.arange(doppler_grid) / doppler_grid
    spatial = np.exp(2j * np.pi * np.outer(np.arange(n_elements), f_s))
    temporal = np.exp(2j * np.pi * np.outer(np.arange(n_pulses), f_d))
    return np.asfortranarray(np.kron(spatial, temporal) / math.sqrt(n_elements * n_pulses))


@dataclass(frozen=True)
class GaussianEnsemble:
    kind: ClassVar[str] = "Gaussian"
    is_complex: ClassVar[bool] = False

    def generate(self, m: int, N: int, seed: int) -> np.ndarray:
        return gen_gaussian(m, N, seed)

    def to_dict(self) -> dict:
        return {"kind": self.kind}


@dataclass(frozen=True)
class BernoulliEnsemble:
    kind: ClassVar[str] = "Bernoulli"
    is_complex: ClassVar[bool] = False

    def generate(self, m: int, N: int, seed: int) -> np.ndarray:
        return gen_bernoulli(m, N, seed)

    def to_dict(self) -> dict:
        return {"kind": self.kind}


@dataclass(frozen=True)
class FourierEnsemble:
    kind: ClassVar[str] = "Fourier"
    is_complex: ClassVar[bool] = True

    def generate(self, m: int, N: int, seed: int) -> np.ndarray:
        return gen_fourier(m, N, seed)

    def to_dict(self) -> dict:
        return {"kind": self.kind}


@dataclass(frozen=True)
class SpatialTemporalEnsemble:
    n_elements: int = 16
    n_pulses: int = 14
    spatial_grid: int = 30
    doppler_grid: int = 30
    kind: ClassVar[str] = "SpatialTemporal"
    is_complex: ClassVar[bool] = True

    def __post_init__(self):
        for name in ("n_elements", "n_pulses", "spatial_grid", "doppler_grid"):
            value = getattr(self, name)
            if not isinstance(value, int) or value < 1:
                raise RejectedInputError(f"{name} must be a positive integer, got {value!r}")

    @property
    def rows(self) -> int:
        return self.n_elements * self.n_pulses

    @property
    def cols(self) -> int:
        return self.spatial_grid * self.doppler_grid

    @property
    def grid(self) -> tuple[int, int]:
        return self.spatial_grid, self.doppler_grid

    def generate(self, m: int, N: int, seed: Optional[int] = None) -> np.ndarray:
        if (m, N) != (self.rows, self.cols):
            raise RejectedInputError(
                f"SpatialTemporal ensemble is {self.rows}x{self.cols}, requested {m}x{N}"
            )
        return gen_stap(self.n_elements, self.n_pulses, self.spatial_grid, self.doppler_grid)

    def to_dict(self) -> dict:
        return {"kind": self.kind, **asdict(self)}


MeasurementEnsemble = Union[GaussianEnsemble, BernoulliEnsemble, FourierEnsemble, SpatialTemporalEnsemble]

ENSEMBLES = {
    cls.kind: cls
    for cls in (GaussianEnsemble, BernoulliEnsemble, FourierEnsemble, SpatialTemporalEnsemble)
}


def ensemble_from_dict(data: dict) -> MeasurementEnsemble:
    if not isinstance(data, dict) or "kind" not in data:
        raise RejectedInputError("ensemble must be an object with a 'kind' key")
    kind = data["kind"]
    if kind not in ENSEMBLES:
        raise RejectedInputError(f"unknown ensemble kind {kind!r}; expected one of {sorted(ENSEMBLES)}")
    params = {k: v for k, v in data.items() if k != "kind"}
    try:
        return ENSEMBLES[kind](**params)
    except TypeError as e:
        raise RejectedInputError(f"bad parameters for ensemble {kind}: {e}") from e


@dataclass(frozen=True)
class RicEstimate:
    order: int
    delta: float


def ric_bruteforce(A, K: int) -> RicEstimate:
    """delta_K as the worst Gram-spectrum deviation over every K-column subset."""
    A = np.asarray(A)
    N = A.shape[1]
    if K < 1 or K > N:
        raise RejectedInputError(f"order K={K} must lie in 1..{N}")
    n_subsets = math.comb(N, K)
    if n_subsets > RIC_SUBSET_LIMIT:
        raise RejectedInputError(
            f"C({N},{K}) = {n_subsets} subsets exceeds the brute-force limit {RIC_SUBSET_LIMIT}"
        )
    gram = A.conj().T @ A
    delta = 0.0
    combos = itertools.combinations(range(N), K)
    while True:
        chunk = np.array(list(itertools.islice(combos, _RIC_CHUNK)), dtype=np.intp)
        if chunk.size == 0:
            break
        sub = gram[chunk[:, :, None], chunk[:, None, :]]
        eig = np.linalg.eigvalsh(sub)
        delta = max(delta, float(np.max(eig[:, -1] - 1.0)), float(np.max(1.0 - eig[:, 0])))
    logger.debug("ric_bruteforce: K=%d over %d subsets -> %.6f", K, n_subsets, delta)
    return RicEstimate(order=K, delta=max(delta, 0.0))

"""
Sparse target signals and SNR-controlled noise.

Four magnitude models are supported (flat, piecewise flat, exponential and
polynomial decay). All of them produce exactly S nonzeros with magnitudes in
(0, 1]; signs (real field) or phases (complex field) are uniform.
"""

import logging
import math
from dataclasses import asdict, dataclass
from typing import ClassVar, Optional, Union

import numpy as np

from errors import RejectedInputError
from linalg import as_matrix, as_vector

logger = logging.getLogger(__name__)

NOISELESS = math.inf
FIELDS = ("real", "complex")


@dataclass(frozen=True)
class SparseSignal:
    """Exact support plus aligned nonzero values in ambient dimension N."""

    ambient_dim: int
    support: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        support = np.asarray(self.support, dtype=np.intp).reshape(-1)
        values = np.asarray(self.values).reshape(-1)
        if values.dtype.kind not in "fc":
            values = values.astype(np.float64)
        if self.ambient_dim < 1:
            raise RejectedInputError("ambient_dim must be positive")
        if support.shape != values.shape:
            raise RejectedInputError(f"support/values length mismatch: {support.size} vs {values.size}")
        if support.size > self.ambient_dim:
            raise RejectedInputError("more nonzeros than the ambient dimension")
        if support.size and (np.any(np.diff(support) <= 0) or support[0] < 0 or support[-1] >= self.ambient_dim):
            raise RejectedInputError("support must be strictly increasing indices inside 0..N-1")
        if np.any(values == 0):
            raise RejectedInputError("stored values must be nonzero")
        object.__setattr__(self, "support", support)
        object.__setattr__(self, "values", values)

    def sparsity(self) -> int:
        return int(self.support.size)

    def to_dense(self) -> np.ndarray:
        x = np.zeros(self.ambient_dim, dtype=self.values.dtype if self.values.size else np.float64)
        x[self.support] = self.values
        return x

    @classmethod
    def from_dense(cls, x) -> "SparseSignal":
        x = np.asarray(x)
        support = np.flatnonzero(x)
        return cls(ambient_dim=x.shape[0], support=support, values=x[support])

    @classmethod
    def empty(cls, ambient_dim: int, dtype=np.float64) -> "SparseSignal":
        return cls(ambient_dim, np.zeros(0, dtype=np.intp), np.zeros(0, dtype=dtype))

    def scaled(self, c) -> "SparseSignal":
        if c == 0:
            return SparseSignal.empty(self.ambient_dim, self.values.dtype)
        return SparseSignal(self.ambient_dim, self.support, self.values * c)

    def significant_support(self, rel_tol: float = 1e-6) -> np.ndarray:
        """Indices whose magnitude exceeds ``rel_tol`` times the largest magnitude."""
        if not self.values.size:
            return self.support
        mags = np.abs(self.values)
        return self.support[mags > rel_tol * mags.max()]


@dataclass(frozen=True)
class FlatModel:
    kind: ClassVar[str] = "Flat"
    contiguous: ClassVar[bool] = False

    def magnitudes(self, S: int, rng: np.random.Generator) -> np.ndarray:
        return np.ones(S)

    def to_dict(self) -> dict:
        return {"kind": self.kind}


@dataclass(frozen=True)
class PiecewiseFlatModel:
    """Support split into ``n_pieces`` contiguous runs, one log-uniform level per run.

    ``n_pieces=None`` resolves to max(1, S // 4) at generation time.
    """

    n_pieces: Optional[int] = None
    level_range: tuple = (0.1, 1.0)
    kind: ClassVar[str] = "PiecewiseFlat"
    contiguous: ClassVar[bool] = True

    def __post_init__(self):
        low, high = self.level_range
        if not 0 < low <= high <= 1:
            raise RejectedInputError(f"level_range must satisfy 0 < low <= high <= 1, got {self.level_range}")
        if self.n_pieces is not None and self.n_pieces < 1:
            raise RejectedInputError("n_pieces must be positive")
        object.__setattr__(self, "level_range", (float(low), float(high)))

    def pieces_for(self, S: int) -> int:
        n = self.n_pieces if self.n_pieces is not None else max(1, S // 4)
        return min(n, S)

    def piece_sizes(self, S: int, rng: np.random.Generator) -> np.ndarray:
        n = self.pieces_for(S)
        cuts = np.sort(rng.choice(np.arange(1, S), size=n - 1, replace=False)) if n > 1 else np.array([], int)
        return np.diff(np.concatenate(([0], cuts, [S])))

    def magnitudes(self, S: int, rng: np.random.Generator, sizes: np.ndarray = None) -> np.ndarray:
        if sizes is None:
            sizes = self.piece_sizes(S, rng)
        low, high = self.level_range
        levels = np.exp(rng.uniform(math.log(low), math.log(high), size=sizes.size))
        return np.repeat(levels, sizes)

    def to_dict(self) -> dict:
        return {"kind": self.kind, "n_pieces": self.n_pieces, "level_range": list(self.level_range)}


@dataclass(frozen=True)
class ExponentialModel:
    alpha: float = 0.5
    kind: ClassVar[str] = "Exponential"
    contiguous: ClassVar[bool] = False

    def __post_init__(self):
        if not 0 < self.alpha < 1:
            raise RejectedInputError(f"alpha must lie in (0, 1), got {self.alpha}")

    def magnitudes(self, S: int, rng: np.random.Generator) -> np.ndarray:
        # C * alpha**i for i = 1..S with C = 1/alpha so the largest is 1
        return self.alpha ** np.arange(S, dtype=float)

    def to_dict(self) -> dict:
        return {"kind": self.kind, **asdict(self)}


@dataclass(frozen=True)
class PolynomialModel:
    p: float = 0.5
    kind: ClassVar[str] = "Polynomial"
    contiguous: ClassVar[bool] = False

    def __post_init__(self):
        if not 0 < self.p < 1:
            raise RejectedInputError(f"p must lie in (0, 1), got {self.p}")

    def magnitudes(self, S: int, rng: np.random.Generator) -> np.ndarray:
        i = np.arange(S, 0, -1, dtype=float)
        return (i / S) ** (1.0 / self.p)

    def to_dict(self) -> dict:
        return {"kind": self.kind, **asdict(self)}


SignalModel = Union[FlatModel, PiecewiseFlatModel, ExponentialModel, PolynomialModel]

SIGNAL_MODELS = {cls.kind: cls for cls in (FlatModel, PiecewiseFlatModel, ExponentialModel, PolynomialModel)}


def signal_model_from_dict(data: dict) -> SignalModel:
    if not isinstance(data, dict) or "kind" not in data:
        raise RejectedInputError("signal must be an object with a 'kind' key")
    kind = data["kind"]
    if kind not in SIGNAL_MODELS:
        raise RejectedInputError(f"unknown signal model {kind!r}; expected one of {sorted(SIGNAL_MODELS)}")
    params = {k: v for k, v in data.items() if k != "kind"}
    if "level_range" in params:
        params["level_range"] = tuple(params["level_range"])
    try:
        return SIGNAL_MODELS[kind](**params)
    except TypeError as e:
        raise RejectedInputError(f"bad parameters for signal model {kind}: {e}") from e


def _contiguous_support(N: int, sizes: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    # stars and bars: run i starts at slot t_i - i + (sizes before i)
    S, n = int(sizes.sum()), sizes.size
    slots = np.sort(rng.choice(N - S + n, size=n, replace=False))
    starts = slots - np.arange(n) + np.concatenate(([0], np.cumsum(sizes)[:-1]))
    return np.concatenate([np.arange(s, s + size) for s, size in zip(starts, sizes)])


def gen_sparse_signal(N: int, S: int, model: SignalModel, seed: int, field: str = "real") -> SparseSignal:
    if not 1 <= S <= N:
        raise RejectedInputError(f"sparsity S={S} must lie in 1..N={N}")
    if field not in FIELDS:
        raise RejectedInputError(f"field must be one of {FIELDS}, got {field!r}")
    rng = np.random.default_rng(seed)

    if model.contiguous:
        sizes = model.piece_sizes(S, rng)
        support = _contiguous_support(N, sizes, rng)
        mags = model.magnitudes(S, rng, sizes=sizes)
    else:
        order = rng.choice(N, size=S, replace=False)
        support = np.sort(order)
        mags = model.magnitudes(S, rng)[rng.permutation(S)]

    if field == "real":
        values = mags * rng.choice([-1.0, 1.0], size=S)
    else:
        values = mags * np.exp(2j * np.pi * rng.uniform(0.0, 1.0, size=S))
    return SparseSignal(ambient_dim=N, support=support, values=values)


def measure(A, x: SparseSignal) -> np.ndarray:
    """y = sum over the support of x_j * column_j(A); x is never densified."""
    A = as_matrix(A)
    if x.ambient_dim != A.shape[1]:
        raise RejectedInputError(f"signal dimension {x.ambient_dim} != matrix columns {A.shape[1]}")
    dtype = np.result_type(A.dtype, x.values.dtype)
    if not x.support.size:
        return np.zeros(A.shape[0], dtype=dtype)
    return A[:, x.support] @ x.values


def add_noise(y, snr_db: float, seed: int) -> np.ndarray:
    """Add Gaussian noise rescaled so the realized SNR equals ``snr_db`` exactly.

    ``snr_db = NOISELESS`` (+inf) returns an unchanged copy.
    """
    y = as_vector(y)
    y_norm = np.linalg.norm(y)
    if y_norm == 0:
        raise RejectedInputError("SNR is undefined for a zero measurement vector")
    if snr_db == NOISELESS:
        return y.copy()
    if math.isnan(snr_db):
        raise RejectedInputError("snr_db must be a number")
    rng = np.random.default_rng(seed)
    if np.iscomplexobj(y):
        n = (rng.standard_normal(y.size) + 1j * rng.standard_normal(y.size)) / math.sqrt(2.0)
    else:
        n = rng.standard_normal(y.size)
    n *= y_norm * 10.0 ** (-snr_db / 20.0) / np.linalg.norm(n)
    return y + n

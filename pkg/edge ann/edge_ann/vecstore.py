"""Vector dataset storage, ingestion and synthetic generation.

A VecStore is the single immutable N x d float32 table every tree refers to by
integer VectorId. It can be loaded from fvecs or CSV files, or generated from a
seeded Gaussian mixture.
"""
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Optional
import hashlib

import numpy as np
import pandas as pd

from .errors import (
    ConfigError,
    DimensionMismatchError,
    EmptyDatasetError,
    VecFormatError,
    VectorIdError,
)
from .logger import get_logger

logger = get_logger(__name__)

MAX_VECTORS = 2**32 - 1


class VecStore:
    """Immutable row-major table of n vectors of dimension dim (float32)."""

    def __init__(self, data):
        arr = np.array(data, dtype=np.float32, order="C", copy=True)
        if arr.ndim != 2:
            raise VecFormatError(f"expected a 2-D table, got shape {arr.shape}")
        if arr.shape[0] == 0:
            raise EmptyDatasetError("dataset holds no vectors")
        if arr.shape[1] == 0:
            raise VecFormatError("vectors must have dim >= 1")
        if arr.shape[0] > MAX_VECTORS:
            raise VecFormatError(f"{arr.shape[0]} vectors exceed the 32-bit id space")
        arr.flags.writeable = False
        self._data = arr

    @property
    def data(self) -> np.ndarray:
        return self._data

    @property
    def n(self) -> int:
        return self._data.shape[0]

    @property
    def dim(self) -> int:
        return self._data.shape[1]

    def __len__(self):
        return self.n

    def __repr__(self):
        return f"VecStore(n={self.n}, dim={self.dim})"

    @cached_property
    def fingerprint(self) -> str:
        """Content hash identifying this dataset (shape + raw float32 bytes)."""
        h = hashlib.blake2b(digest_size=16)
        h.update(np.array([self.n, self.dim], dtype="<u8").tobytes())
        h.update(self._data.astype("<f4", copy=False).tobytes())
        return h.hexdigest()

    def rows(self, ids) -> np.ndarray:
        """float64 copy of the given rows, for accumulation."""
        return self._data[np.asarray(ids, dtype=np.int64)].astype(np.float64)

    def subset(self, ids) -> "VecStore":
        """New store made of the given rows, renumbered 0..len(ids)-1."""
        ids = np.asarray(ids, dtype=np.int64)
        check_ids(self, ids)
        return VecStore(self._data[ids])


@dataclass(frozen=True)
class DataGenSpec:
    n: int
    dim: int
    cluster_count: int = 16
    cluster_stddev: float = 0.05
    seed: int = 0
    # optional (cluster_count x dim) centers; drawn uniformly in [0,1]^dim when None
    centers: Optional[np.ndarray] = field(default=None, compare=False)

    def __post_init__(self):
        if self.n < 1 or self.dim < 1:
            raise ConfigError(f"n and dim must be >= 1 (got n={self.n}, dim={self.dim})")
        if self.cluster_count < 1:
            raise ConfigError("cluster_count must be >= 1")
        if not self.cluster_stddev > 0:
            raise ConfigError("cluster_stddev must be > 0")
        if self.seed < 0 or self.seed >= 2**64:
            raise ConfigError("seed must be an unsigned 64-bit integer")
        if self.centers is not None:
            shape = np.shape(self.centers)
            if shape != (self.cluster_count, self.dim):
                raise ConfigError(f"centers must have shape {(self.cluster_count, self.dim)}, got {shape}")


def check_ids(store: VecStore, ids) -> None:
    ids = np.asarray(ids)
    if ids.size and (ids.min() < 0 or ids.max() >= store.n):
        raise VectorIdError(f"vector id out of range for store of n={store.n}")


def get(store: VecStore, vid: int) -> np.ndarray:
    """Read-only view of row `vid`."""
    vid = int(vid)
    if vid < 0 or vid >= store.n:
        raise VectorIdError(f"vector id {vid} out of range [0, {store.n})")
    return store.data[vid]


def check_query_dim(store: VecStore, q) -> np.ndarray:
    q = np.asarray(q, dtype=np.float64).ravel()
    if q.shape[0] != store.dim:
        raise DimensionMismatchError(f"query has dim {q.shape[0]}, store has dim {store.dim}")
    return q


def load_fvecs(path) -> VecStore:
    """Load a .fvecs file: per record [int32 dim][dim x float32], little-endian."""
    path = Path(path)
    size = path.stat().st_size
    if size == 0:
        raise EmptyDatasetError(f"{path} holds no records")
    if size % 4 != 0:
        raise VecFormatError(f"{path}: truncated record (file size not a multiple of 4)")
    raw = np.fromfile(path, dtype="<i4")

    dim = int(raw[0])
    if dim <= 0:
        raise VecFormatError(f"{path}: record 0 declares dim {dim}")

    width = dim + 1
    if raw.size % width == 0:
        table = raw.reshape(-1, width)
        bad = np.flatnonzero(table[:, 0] != dim)
        if bad.size == 0:
            data = table[:, 1:].view("<f4")
            logger.debug(f"Loaded {table.shape[0]} vectors of dim {dim} from {path}")
            return VecStore(data)
        raise VecFormatError(f"{path}: record {int(bad[0])} declares dim {int(table[bad[0], 0])}, expected {dim}")

    # size does not fit a uniform table; walk the records to name the problem
    offset = 0
    record = 0
    while offset < raw.size:
        declared = int(raw[offset])
        if declared != dim:
            raise VecFormatError(f"{path}: record {record} declares dim {declared}, expected {dim}")
        if offset + 1 + dim > raw.size:
            raise VecFormatError(f"{path}: record {record} is truncated")
        offset += width
        record += 1
    raise VecFormatError(f"{path}: trailing bytes after record {record}")


def write_fvecs(path, store: VecStore) -> Path:
    """Write `store` as .fvecs; load_fvecs reads it back bit-for-bit."""
    path = Path(path)
    table = np.empty((store.n, store.dim + 1), dtype="<f4")
    table[:, 1:] = store.data
    table.view("<i4")[:, 0] = store.dim
    table.tofile(path)
    logger.debug(f"Wrote {store.n} vectors of dim {store.dim} to {path}")
    return path


def load_csv(path) -> VecStore:
    """Load a headerless comma-separated file, one vector per line."""
    path = Path(path)
    try:
        frame = pd.read_csv(path, header=None, dtype=np.float64, skip_blank_lines=True)
    except pd.errors.EmptyDataError:
        raise EmptyDatasetError(f"{path} holds no rows")
    except pd.errors.ParserError as exc:
        raise VecFormatError(f"{path}: ragged rows ({exc})") from exc
    except ValueError as exc:
        raise VecFormatError(f"{path}: non-numeric cell ({exc})") from exc

    if frame.empty:
        raise EmptyDatasetError(f"{path} holds no rows")
    if frame.isna().to_numpy().any():
        row = int(np.flatnonzero(frame.isna().any(axis=1).to_numpy())[0])
        raise VecFormatError(f"{path}: row {row} is ragged or has an empty cell")

    logger.debug(f"Loaded CSV {path} with shape {frame.shape}")
    return VecStore(frame.to_numpy())


def write_csv(path, store: VecStore) -> Path:
    path = Path(path)
    pd.DataFrame(store.data).to_csv(path, header=False, index=False)
    return path


def load_vectors(path) -> VecStore:
    """Dispatch on extension: .csv/.txt is CSV, anything else is fvecs."""
    suffix = Path(path).suffix.lower()
    if suffix in (".csv", ".txt"):
        return load_csv(path)
    return load_fvecs(path)


def gen_synthetic(spec: DataGenSpec) -> VecStore:
    """Draw spec.n vectors from a seeded mixture of isotropic Gaussians.

    Uses numpy's PCG64 generator (`np.random.default_rng(seed)`); draws happen in
    a fixed order (centers, labels, noise) so a DataGenSpec always yields the same bytes.
    """
    rng = np.random.default_rng(spec.seed)
    if spec.centers is None:
        centers = rng.random((spec.cluster_count, spec.dim))
    else:
        centers = np.asarray(spec.centers, dtype=np.float64)
    labels = rng.integers(0, spec.cluster_count, size=spec.n)
    noise = rng.normal(0.0, spec.cluster_stddev, size=(spec.n, spec.dim))
    data = centers[labels] + noise
    logger.debug(
        f"Generated synthetic store n={spec.n} dim={spec.dim} clusters={spec.cluster_count} seed={spec.seed}"
    )
    return VecStore(data)

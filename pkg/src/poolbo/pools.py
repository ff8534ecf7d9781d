"""Candidate pools: validated containers of embeddings, labels and ids.

A pool is the discrete design space the optimizer selects from. Pools are
immutable after construction and safe to share across threads. Two on-disk
formats are supported:

* ``csv`` -- header ``id,e0,...,e{d-1}[,y]``, UTF-8, ``.`` decimal separator.
* ``binary`` -- magic ``GLBO``, version u16, n/d as u64, a label flag byte,
  float32 little-endian row-major embeddings, optional float64 labels, and a
  UTF-8 JSON trailer with ids and metadata.

Embeddings are stored as float32 on disk (they originate from 32-bit model
activations) and promoted to float64 in memory.
"""

from __future__ import annotations

import csv
import json
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .errors import DataError, FormatError

_MAGIC = b"GLBO"
_VERSION = 1


@dataclass(frozen=True)
class CandidatePool:
    """Embedding matrix with identifiers and optional objective labels.

    Attributes
    ----------
    ids : list of str
        Unique opaque identifiers, one per row.
    X : ndarray, shape (n, d)
        Embedding vectors, float64, all finite.
    y : ndarray of shape (n,) or None
        Objective labels in task units; None for unlabeled pools.
    meta : dict of str to str
        Free-form provenance (dataset name, source model, pooling rule...).
    """

    ids: list[str]
    X: np.ndarray
    y: Optional[np.ndarray] = None
    meta: dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        X = np.asarray(self.X, dtype=np.float64)
        if X.ndim != 2 or X.shape[0] < 1 or X.shape[1] < 1:
            raise DataError(f"embedding matrix must be n>=1 by d>=1, got shape {X.shape}")
        object.__setattr__(self, "X", X)
        n = X.shape[0]
        if len(self.ids) != n:
            raise DataError(f"{len(self.ids)} ids for {n} rows")
        if len(set(self.ids)) != n:
            dup = _first_duplicate(self.ids)
            raise DataError(f"duplicate id {dup!r}")
        if not np.all(np.isfinite(X)):
            bad = int(np.where(~np.isfinite(X).all(axis=1))[0][0])
            raise DataError(f"non-finite embedding value at id {self.ids[bad]!r}")
        if self.y is not None:
            y = np.asarray(self.y, dtype=np.float64)
            if y.shape != (n,):
                raise DataError(f"{y.shape[0] if y.ndim == 1 else y.shape} labels for {n} rows")
            if not np.all(np.isfinite(y)):
                bad = int(np.where(~np.isfinite(y))[0][0])
                raise DataError(f"non-finite label at id {self.ids[bad]!r}")
            object.__setattr__(self, "y", y)
        X.setflags(write=False)
        if self.y is not None:
            self.y.setflags(write=False)

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def d(self) -> int:
        return self.X.shape[1]

    @property
    def labeled(self) -> bool:
        return self.y is not None

    def index_of(self, candidate_id: str) -> int:
        try:
            return self._id_index[candidate_id]
        except AttributeError:
            object.__setattr__(self, "_id_index", {c: i for i, c in enumerate(self.ids)})
            return self._id_index[candidate_id]

    def subset(self, indices) -> "CandidatePool":
        """New pool restricted to the given row indices (order preserved)."""
        idx = list(indices)
        return CandidatePool(
            ids=[self.ids[i] for i in idx],
            X=self.X[idx],
            y=None if self.y is None else self.y[idx],
            meta=dict(self.meta),
        )


@dataclass(frozen=True)
class Standardizer:
    """Affine map taking raw targets to zero mean / unit sample variance.

    ``degenerate`` marks constant inputs, for which the scale falls back
    to 1 so the transform stays invertible.
    """

    y_mean: float
    y_std: float
    degenerate: bool = False

    def transform(self, y: np.ndarray) -> np.ndarray:
        return (np.asarray(y, dtype=np.float64) - self.y_mean) / self.y_std

    def inverse(self, z: np.ndarray) -> np.ndarray:
        return np.asarray(z, dtype=np.float64) * self.y_std + self.y_mean

    @classmethod
    def identity(cls) -> "Standardizer":
        return cls(y_mean=0.0, y_std=1.0)

    def to_dict(self) -> dict:
        return {"y_mean": self.y_mean, "y_std": self.y_std, "degenerate": self.degenerate}

    @classmethod
    def from_dict(cls, d: dict) -> "Standardizer":
        return cls(y_mean=d["y_mean"], y_std=d["y_std"], degenerate=d.get("degenerate", False))


def standardize_targets(y) -> tuple[np.ndarray, Standardizer]:
    """Center and scale targets to zero mean, unit sample std (ddof=1).

    Constant inputs fall back to scale 1 and set the degenerate flag.
    """
    y = np.asarray(y, dtype=np.float64)
    if y.ndim != 1 or y.size < 2:
        raise DataError("standardization needs a 1-d vector with at least 2 entries")
    if not np.all(np.isfinite(y)):
        raise DataError("standardization input contains non-finite values")
    mean = float(np.mean(y))
    deviations = y - mean
    # Factor out the magnitude before squaring so tiny target scales do not
    # underflow into denormals and skew the sample standard deviation.
    scale = float(np.max(np.abs(deviations)))
    if scale == 0.0:
        return np.zeros_like(y), Standardizer(y_mean=mean, y_std=1.0,
                                              degenerate=True)
    std = scale * float(np.sqrt(np.sum((deviations / scale) ** 2) / (y.size - 1)))
    scaler = Standardizer(y_mean=mean, y_std=std)
    return scaler.transform(y), scaler


def minmax_scale(X: np.ndarray) -> np.ndarray:
    """Optional per-dimension min-max scaling of embeddings to [0, 1].

    Constant dimensions map to 0. Off by default: the kernel lengthscale
    absorbs global scale and the smoothness diagnostic is scale-relative.
    """
    X = np.asarray(X, dtype=np.float64)
    lo = X.min(axis=0)
    span = X.max(axis=0) - lo
    span[span == 0.0] = 1.0
    return (X - lo) / span


def load_pool(path, format: str) -> CandidatePool:
    """Read a pool file; every input either yields a valid pool or raises.

    Raises
    ------
    FormatError
        Structural problems (bad magic, ragged rows, bad header), with the
        offending row index where applicable.
    DataError
        Well-formed file whose content breaks a pool invariant (duplicate
        id, non-finite value).
    """
    path = Path(path)
    if format == "csv":
        return _load_csv(path)
    if format == "binary":
        return _load_binary(path)
    raise FormatError(f"unknown pool format {format!r}")


def save_pool(pool: CandidatePool, path, format: str) -> None:
    path = Path(path)
    if format == "csv":
        _save_csv(pool, path)
    elif format == "binary":
        _save_binary(pool, path)
    else:
        raise FormatError(f"unknown pool format {format!r}")


def infer_format(path) -> str:
    """Guess the format from the file suffix (.csv vs anything else)."""
    return "csv" if str(path).lower().endswith(".csv") else "binary"


def _load_csv(path: Path) -> CandidatePool:
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise FormatError(f"{path}: empty file") from None
        if not header or header[0] != "id":
            raise FormatError(f"{path}: header must start with 'id'")
        has_y = bool(header) and header[-1] == "y"
        embed_cols = header[1:-1] if has_y else header[1:]
        expected = [f"e{i}" for i in range(len(embed_cols))]
        if embed_cols != expected:
            raise FormatError(f"{path}: embedding columns must be e0..e{{d-1}}, got {embed_cols}")
        d = len(embed_cols)
        if d == 0:
            raise FormatError(f"{path}: no embedding columns")
        width = len(header)
        ids: list[str] = []
        rows: list[list[float]] = []
        labels: list[float] = []
        for rownum, row in enumerate(reader):
            if len(row) != width:
                raise FormatError(f"{path}: row {rownum} has {len(row)} fields, expected {width}")
            ids.append(row[0])
            try:
                rows.append([float(v) for v in row[1:d + 1]])
                if has_y:
                    labels.append(float(row[d + 1]))
            except ValueError as exc:
                raise FormatError(f"{path}: row {rownum}: {exc}") from None
        if not ids:
            raise FormatError(f"{path}: no data rows")
        X = np.asarray(rows, dtype=np.float64)
        y = np.asarray(labels, dtype=np.float64) if has_y else None
        return CandidatePool(ids=ids, X=X, y=y)


def _save_csv(pool: CandidatePool, path: Path) -> None:
    header = ["id"] + [f"e{i}" for i in range(pool.d)] + (["y"] if pool.labeled else [])
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for i, cid in enumerate(pool.ids):
            row = [cid] + [repr(float(v)) for v in pool.X[i]]
            if pool.labeled:
                row.append(repr(float(pool.y[i])))
            writer.writerow(row)


def _load_binary(path: Path) -> CandidatePool:
    blob = Path(path).read_bytes()
    if len(blob) < 4 + 2 + 8 + 8 + 1:
        raise FormatError(f"{path}: truncated header")
    if blob[:4] != _MAGIC:
        raise FormatError(f"{path}: bad magic {blob[:4]!r}")
    version, = struct.unpack_from("<H", blob, 4)
    if version != _VERSION:
        raise FormatError(f"{path}: unsupported version {version}")
    n, d = struct.unpack_from("<QQ", blob, 6)
    flags, = struct.unpack_from("<B", blob, 22)
    has_y = bool(flags & 1)
    offset = 23
    need = n * d * 4 + (n * 8 if has_y else 0)
    if len(blob) < offset + need:
        raise FormatError(f"{path}: truncated payload (need {need} bytes after header)")
    X32 = np.frombuffer(blob, dtype="<f4", count=n * d, offset=offset).reshape(n, d)
    offset += n * d * 4
    y = None
    if has_y:
        y = np.frombuffer(blob, dtype="<f8", count=n, offset=offset).copy()
        offset += n * 8
    try:
        trailer = json.loads(blob[offset:].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise FormatError(f"{path}: bad JSON trailer: {exc}") from None
    if not isinstance(trailer, dict) or "ids" not in trailer:
        raise FormatError(f"{path}: trailer must be an object with 'ids'")
    ids = trailer["ids"]
    if not isinstance(ids, list) or len(ids) != n:
        raise FormatError(f"{path}: trailer has {len(ids) if isinstance(ids, list) else '?'} ids for {n} rows")
    meta = trailer.get("meta", {})
    return CandidatePool(ids=[str(c) for c in ids], X=X32.astype(np.float64), y=y, meta=meta)


def _save_binary(pool: CandidatePool, path: Path) -> None:
    parts = [_MAGIC, struct.pack("<H", _VERSION),
             struct.pack("<QQ", pool.n, pool.d),
             struct.pack("<B", 1 if pool.labeled else 0),
             np.ascontiguousarray(pool.X, dtype="<f4").tobytes()]
    if pool.labeled:
        parts.append(np.ascontiguousarray(pool.y, dtype="<f8").tobytes())
    parts.append(json.dumps({"ids": pool.ids, "meta": pool.meta}, sort_keys=True).encode("utf-8"))
    Path(path).write_bytes(b"".join(parts))


def _first_duplicate(items):
    seen = set()
    for item in items:
        if item in seen:
            return item
        seen.add(item)
    return None

"""Shared plumbing: named RNG streams, running moment accumulators, and
deterministic CSV/JSON writers.

Everything downstream (simulators, estimators, the CLI) builds on the
primitives here so that a run is reproducible from (seed, labels) alone
and so that result files are byte-stable across reruns.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np


class ConfigurationError(ValueError):
    """Raised when parameters are outside an operation's domain."""


class ProtocolError(RuntimeError):
    """Raised when a pluggable component violates its interface contract."""


class SchemaError(ValueError):
    """Raised when a result file does not match its declared schema."""


# ---------------------------------------------------------------------------
# RNG streams
# ---------------------------------------------------------------------------

_U64 = (1 << 64) - 1


def stream_key(*labels: object) -> int:
    """Hash a tuple of labels to a stable 64-bit stream id.

    Floats are keyed by their repr so that 0.1 and 0.1000000000000001 get
    distinct streams only when they are distinct doubles.
    """
    blob = "\x1f".join(f"{type(x).__name__}:{x!r}" for x in labels)
    digest = hashlib.blake2b(blob.encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "little")


@dataclass(frozen=True)
class RngStream:
    """A named, reproducible random stream.

    Two streams with the same (seed, stream_id) yield identical draw
    sequences; distinct stream_ids under one seed are independent for
    Monte Carlo purposes.
    """

    seed: int
    stream_id: int = 0

    def __post_init__(self) -> None:
        if not (0 <= int(self.seed) <= _U64):
            raise ConfigurationError(f"seed must be a u64, got {self.seed}")
        if not (0 <= int(self.stream_id) <= _U64):
            raise ConfigurationError(f"stream_id must be a u64, got {self.stream_id}")

    def generator(self) -> np.random.Generator:
        """Build a fresh generator positioned at the start of the stream."""
        seq = np.random.SeedSequence(entropy=[int(self.seed), int(self.stream_id)])
        return np.random.Generator(np.random.PCG64(seq))


def substream(seed: int, *labels: object) -> np.random.Generator:
    """Generator for the stream identified by hashed labels under ``seed``."""
    return RngStream(seed, stream_key(*labels)).generator()


# ---------------------------------------------------------------------------
# Running moments
# ---------------------------------------------------------------------------


@dataclass
class MomentAccumulator:
    """Single-pass mean and covariance accumulator over vectors in R^d.

    Uses the pairwise-mergeable update so partial accumulators from
    concurrent batches combine into exactly the same totals as a single
    sequential pass (up to float rounding).
    """

    dimension: int
    count: int = 0
    _mean: np.ndarray = field(init=False)
    _m2: np.ndarray = field(init=False)

    def __post_init__(self) -> None:
        if self.dimension < 1:
            raise ConfigurationError(f"dimension must be >= 1, got {self.dimension}")
        self._mean = np.zeros(self.dimension)
        self._m2 = np.zeros((self.dimension, self.dimension))

    def add(self, x: np.ndarray) -> None:
        """Fold one observation into the running moments."""
        x = np.asarray(x, dtype=float)
        if x.shape != (self.dimension,):
            raise ConfigurationError(
                f"observation shape {x.shape} does not match dimension {self.dimension}"
            )
        self.count += 1
        delta = x - self._mean
        self._mean += delta / self.count
        self._m2 += np.outer(delta, x - self._mean)

    def add_batch(self, xs: np.ndarray) -> None:
        """Fold a (count, dimension) batch in one vectorized step."""
        xs = np.asarray(xs, dtype=float)
        if xs.ndim != 2 or xs.shape[1] != self.dimension:
            raise ConfigurationError(
                f"batch shape {xs.shape} does not match dimension {self.dimension}"
            )
        if xs.shape[0] == 0:
            return
        other = MomentAccumulator(self.dimension)
        other.count = xs.shape[0]
        other._mean = xs.mean(axis=0)
        centered = xs - other._mean
        other._m2 = centered.T @ centered
        self.merge(other)

    def merge(self, other: "MomentAccumulator") -> None:
        """Combine another accumulator into this one."""
        if other.dimension != self.dimension:
            raise ConfigurationError(
                f"cannot merge dimension {other.dimension} into {self.dimension}"
            )
        if other.count == 0:
            return
        if self.count == 0:
            self.count = other.count
            self._mean = other._mean.copy()
            self._m2 = other._m2.copy()
            return
        total = self.count + other.count
        delta = other._mean - self._mean
        self._m2 = (
            self._m2
            + other._m2
            + np.outer(delta, delta) * (self.count * other.count / total)
        )
        self._mean = self._mean + delta * (other.count / total)
        self.count = total

    @property
    def mean(self) -> np.ndarray:
        return self._mean.copy()

    def covariance(self) -> np.ndarray:
        """Unbiased sample covariance; zeros until two observations exist."""
        if self.count < 2:
            return np.zeros((self.dimension, self.dimension))
        return self._m2 / (self.count - 1)

    def trace_covariance(self) -> float:
        return float(np.trace(self.covariance()))


# ---------------------------------------------------------------------------
# Gaussian noise with a validated covariance factor
# ---------------------------------------------------------------------------


def covariance_factor(sigma: np.ndarray) -> np.ndarray:
    """Return L with L L^T = sigma, accepting any symmetric PSD matrix.

    Cholesky handles the definite case; semidefinite inputs (including the
    zero matrix, used for noise-free runs) fall back to an eigenvalue
    factorization with tiny negative eigenvalues clipped to zero.
    """
    sigma = np.asarray(sigma, dtype=float)
    if sigma.ndim != 2 or sigma.shape[0] != sigma.shape[1]:
        raise ConfigurationError(f"covariance must be square, got shape {sigma.shape}")
    if not np.allclose(sigma, sigma.T, atol=1e-12):
        raise ConfigurationError("covariance must be symmetric")
    try:
        return np.linalg.cholesky(sigma)
    except np.linalg.LinAlgError:
        eigvals, eigvecs = np.linalg.eigh(sigma)
        tol = 1e-10 * max(1.0, float(np.abs(eigvals).max(initial=0.0)))
        if eigvals.min(initial=0.0) < -tol:
            raise ConfigurationError("covariance must be positive semidefinite")
        return eigvecs * np.sqrt(np.clip(eigvals, 0.0, None))


# ---------------------------------------------------------------------------
# Deterministic result files
# ---------------------------------------------------------------------------


def format_cell(value: object) -> str:
    """Format one CSV cell; floats use 17 significant digits."""
    if isinstance(value, (bool, np.bool_)):
        return str(int(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".17g")
    return str(value)


def write_csv(path: str | Path, columns: Sequence[str], rows: Iterable[Sequence[object]]) -> Path:
    """Write rows under a header with deterministic formatting."""
    path = Path(path)
    lines = [",".join(columns)]
    for row in rows:
        row = list(row)
        if len(row) != len(columns):
            raise SchemaError(
                f"row width {len(row)} does not match {len(columns)} columns"
            )
        lines.append(",".join(format_cell(v) for v in row))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def _parse_cell(text: str, kind: str) -> object:
    if kind == "int":
        return int(text)
    if kind == "float":
        return float(text)
    if kind == "str":
        return text
    raise SchemaError(f"unknown column kind {kind!r}")


def read_csv(path: str | Path, schema: Sequence[tuple[str, str]]) -> list[dict[str, object]]:
    """Read and validate a CSV against (name, kind) column pairs.

    Raises SchemaError on a header mismatch or an uncoercible cell; kinds
    are 'int', 'float', or 'str'.
    """
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    lines = [ln for ln in text.splitlines() if ln != ""]
    if not lines:
        raise SchemaError(f"{path}: empty file, expected a header row")
    names = [name for name, _ in schema]
    header = lines[0].split(",")
    if header != names:
        raise SchemaError(f"{path}: header {header} does not match schema {names}")
    out: list[dict[str, object]] = []
    for i, line in enumerate(lines[1:], start=2):
        cells = line.split(",")
        if len(cells) != len(schema):
            raise SchemaError(f"{path}:{i}: expected {len(schema)} cells, got {len(cells)}")
        row: dict[str, object] = {}
        for cell, (name, kind) in zip(cells, schema):
            try:
                row[name] = _parse_cell(cell, kind)
            except ValueError as exc:
                raise SchemaError(f"{path}:{i}: column {name!r}: {exc}") from exc
        out.append(row)
    return out


def write_json(path: str | Path, payload: dict) -> Path:
    """Write a JSON mapping with sorted keys and a trailing newline."""
    path = Path(path)
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path


def float_grid(start: float, stop: float, step: float) -> np.ndarray:
    """Inclusive arange that lands exactly on rational grid points."""
    if step <= 0:
        raise ConfigurationError(f"step must be positive, got {step}")
    n = int(math.floor((stop - start) / step + 0.5))
    grid = start + step * np.arange(n + 1)
    return np.round(grid, 12)

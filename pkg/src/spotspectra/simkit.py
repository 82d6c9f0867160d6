"""Simulation of multivariate log-price paths on an equidistant time grid.

The data-generating process is a driftless Brownian semimartingale: between
consecutive grid points the log-price increment of each coordinate is a
centered Gaussian whose variance equals the instantaneous variance integrated
over the cell.  Because every supported volatility specification admits that
integral in closed form (or conditionally on a simulated driver path), the
increments are sampled exactly rather than by Euler refinement of the cell.

Supported volatility specifications (all diagonal, see :class:`VolModel`):

* ``DETERMINISTIC_SIN`` -- scalar variance ``base + r1*sin(2*pi*t)`` on every
  coordinate; seasonal intraday pattern.
* ``STOCHASTIC_BM`` -- scalar volatility ``sqrt(base) + r2*W_t`` driven by an
  auxiliary Brownian motion shared by all coordinates.
* ``CONSTANT_DIAG`` -- time-constant diagonal variance matrix.
* ``PIECEWISE_DIAG`` -- constant diagonal plus the ``r1*sin(2*pi*t)``
  modulation on every coordinate; used for two-block alternatives.

Randomness is organised as counter-based Philox substreams keyed by
``(replication, coordinate)`` under a single master seed, so Monte Carlo
results are reproducible bit-for-bit regardless of scheduling or worker
count.  Coordinate index ``p`` (one past the last price coordinate) is
reserved for the volatility driver of ``STOCHASTIC_BM``.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Optional, Sequence, TextIO, Union

import numpy as np

from .errors import ConfigError

__all__ = [
    "VolKind",
    "GridConfig",
    "VolModel",
    "PricePath",
    "simulate_path",
    "simulate_window_increments",
    "increments",
    "write_path_csv",
    "read_path_csv",
]

# Substream key layout: one 128-bit Philox key = (master seed, packed index)
# with packed index = replication * 2**20 + coordinate.  Distinct keys give
# statistically independent streams by construction of the Philox cipher.
_COORD_BITS = 20
_MAX_COORD = (1 << _COORD_BITS) - 1
_MAX_REPLICATION = (1 << 44) - 1


def _substream(seed: int, replication: int, coord: int) -> np.random.Generator:
    """Return the Philox substream for one (replication, coordinate) pair."""
    if not 0 <= replication <= _MAX_REPLICATION:
        raise ConfigError(f"replication index {replication} outside [0, 2**44)")
    if not 0 <= coord <= _MAX_COORD:
        raise ConfigError(f"coordinate index {coord} outside [0, 2**20)")
    key = np.array([seed, (replication << _COORD_BITS) | coord], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


class VolKind(Enum):
    """Volatility specification selector."""

    DETERMINISTIC_SIN = "deterministic_sin"
    STOCHASTIC_BM = "stochastic_bm"
    CONSTANT_DIAG = "constant_diag"
    PIECEWISE_DIAG = "piecewise_diag"


@dataclass(frozen=True)
class GridConfig:
    """Observation grid: ``n`` cells of width ``1/n`` on [0, 1], ``p`` coordinates.

    ``seed`` is the master seed all substreams are derived from.
    """

    n: int
    p: int
    seed: int

    def __post_init__(self) -> None:
        if not isinstance(self.n, int) or self.n < 1:
            raise ConfigError(f"n must be a positive integer, got {self.n!r}")
        if not isinstance(self.p, int) or self.p < 1:
            raise ConfigError(f"p must be a positive integer, got {self.p!r}")
        if self.p >= _MAX_COORD:
            raise ConfigError(f"p must be < {_MAX_COORD} to fit the substream layout")
        if not isinstance(self.seed, int) or not 0 <= self.seed < 2**64:
            raise ConfigError(f"seed must be an integer in [0, 2**64), got {self.seed!r}")


@dataclass(frozen=True)
class VolModel:
    """Diagonal volatility specification.

    Fields not used by ``kind`` must keep their neutral defaults; the
    constructor enforces this so a model never carries silently ignored
    parameters.  ``diag`` holds per-coordinate variance levels for the
    diagonal kinds and must have one entry per simulated coordinate.
    """

    kind: VolKind
    base: float = 0.0
    r1: float = 0.0
    r2: float = 0.0
    diag: Optional[tuple[float, ...]] = None

    def __post_init__(self) -> None:
        for name in ("base", "r1", "r2"):
            value = getattr(self, name)
            if not math.isfinite(value) or value < 0.0:
                raise ConfigError(f"{name} must be finite and nonnegative, got {value!r}")
        scalar_kind = self.kind in (VolKind.DETERMINISTIC_SIN, VolKind.STOCHASTIC_BM)
        if scalar_kind:
            if self.diag is not None:
                raise ConfigError(f"{self.kind.value} does not take a diag vector")
        else:
            if self.diag is None or len(self.diag) == 0:
                raise ConfigError(f"{self.kind.value} requires a nonempty diag vector")
            if self.base != 0.0:
                raise ConfigError(f"{self.kind.value} does not use base; leave it at 0")
            if any(not math.isfinite(d) or d < 0.0 for d in self.diag):
                raise ConfigError("diag entries must be finite and nonnegative")
        if self.kind is VolKind.DETERMINISTIC_SIN:
            if self.r2 != 0.0:
                raise ConfigError("deterministic_sin does not use r2")
            if self.base - self.r1 < 0.0:
                raise ConfigError(
                    f"variance base + r1*sin can go negative: base={self.base}, r1={self.r1}"
                )
        elif self.kind is VolKind.STOCHASTIC_BM:
            if self.r1 != 0.0:
                raise ConfigError("stochastic_bm does not use r1")
        elif self.kind is VolKind.CONSTANT_DIAG:
            if self.r1 != 0.0 or self.r2 != 0.0:
                raise ConfigError("constant_diag does not use r1 or r2")
        elif self.kind is VolKind.PIECEWISE_DIAG:
            if self.r2 != 0.0:
                raise ConfigError("piecewise_diag does not use r2")
            if min(self.diag) - self.r1 < 0.0:
                raise ConfigError(
                    f"variance min(diag) + r1*sin can go negative: "
                    f"min(diag)={min(self.diag)}, r1={self.r1}"
                )

    # -- factories -----------------------------------------------------------

    @classmethod
    def deterministic_sin(cls, base: float, r1: float = 0.0) -> "VolModel":
        """Scalar variance ``base + r1*sin(2*pi*t)`` on every coordinate."""
        return cls(kind=VolKind.DETERMINISTIC_SIN, base=base, r1=r1)

    @classmethod
    def stochastic_bm(cls, base: float, r2: float = 0.0) -> "VolModel":
        """Scalar volatility ``sqrt(base) + r2*W_t`` on every coordinate."""
        return cls(kind=VolKind.STOCHASTIC_BM, base=base, r2=r2)

    @classmethod
    def constant_diag(cls, diag: Sequence[float]) -> "VolModel":
        """Time-constant diagonal variance matrix ``diag``."""
        return cls(kind=VolKind.CONSTANT_DIAG, diag=tuple(float(d) for d in diag))

    @classmethod
    def piecewise_diag(cls, diag: Sequence[float], r1: float = 0.0) -> "VolModel":
        """Diagonal variances ``diag`` plus ``r1*sin(2*pi*t)`` on each entry."""
        return cls(
            kind=VolKind.PIECEWISE_DIAG,
            r1=r1,
            diag=tuple(float(d) for d in diag),
        )

    @classmethod
    def two_block(
        cls, p: int, split: float, high: float, low: float, r1: float = 0.0
    ) -> "VolModel":
        """Two-block diagonal: ``floor(split*p)`` entries at ``high``, rest at ``low``."""
        if not 0.0 < split < 1.0:
            raise ConfigError(f"split must lie in (0, 1), got {split!r}")
        n_high = int(math.floor(split * p))
        return cls.piecewise_diag((high,) * n_high + (low,) * (p - n_high), r1=r1)


@dataclass(frozen=True)
class PricePath:
    """A simulated path: ``values[j, i]`` is coordinate ``j`` at time ``grid[i]``.

    ``grid`` has ``n + 1`` entries ``i/n``; column 0 of ``values`` holds the
    initial value (zero).
    """

    grid: np.ndarray
    values: np.ndarray
    model: VolModel
    config: GridConfig


def _sin_cell_integrals(r1: float, n: int, start: int, count: int) -> np.ndarray:
    """Integral of ``r1*sin(2*pi*s)`` over cells ``start+1 .. start+count``.

    Closed form per cell i: ``(r1/(2*pi)) * (cos(2*pi*(i-1)/n) - cos(2*pi*i/n))``;
    exactly zero (not merely small) when ``r1 == 0``.
    """
    edges = np.cos(2.0 * np.pi * (np.arange(start, start + count + 1) / n))
    return (r1 / (2.0 * np.pi)) * (edges[:-1] - edges[1:])


def _variance_profile(
    model: VolModel,
    n: int,
    start: int,
    count: int,
    p: int,
    vol_rng: Callable[[], np.random.Generator],
) -> np.ndarray:
    """Exact per-cell integrated variances for cells ``start+1 .. start+count``.

    Returns shape ``(count,)`` for scalar kinds and ``(p, count)`` for
    diagonal kinds; both broadcast against a ``(p, count)`` noise array.
    ``vol_rng`` lazily supplies the volatility-driver substream (only
    consumed by ``STOCHASTIC_BM`` with ``r2 > 0``).
    """
    if model.kind is VolKind.DETERMINISTIC_SIN:
        return model.base / n + _sin_cell_integrals(model.r1, n, start, count)
    if model.kind is VolKind.STOCHASTIC_BM:
        if model.r2 == 0.0:
            # Short-circuit keeps the r2 == 0 path bit-identical to the
            # deterministic model with r1 == 0 (sqrt round trips are inexact).
            return np.full(count, model.base / n)
        m = start + count - 1  # driver increments up to the last left endpoint
        dw = vol_rng().standard_normal(m) * math.sqrt(1.0 / n)
        w_grid = np.concatenate(([0.0], np.cumsum(dw)))
        sigma = math.sqrt(model.base) + model.r2 * w_grid[start : start + count]
        return sigma**2 / n
    diag = np.asarray(model.diag, dtype=float)
    if diag.shape != (p,):
        raise ConfigError(f"diag has length {diag.size}, expected p = {p}")
    flat = diag[:, None] / n
    if model.kind is VolKind.CONSTANT_DIAG:
        return np.broadcast_to(flat, (p, count)).copy()
    return flat + _sin_cell_integrals(model.r1, n, start, count)[None, :]


def simulate_window_increments(
    config: GridConfig,
    model: VolModel,
    start: int,
    count: int,
    replication: int = 0,
) -> np.ndarray:
    """Sample the ``p x count`` increment block for cells ``start+1 .. start+count``.

    Each coordinate's noise comes from its ``(replication, coordinate)``
    substream; the window draw consumes the first ``count`` variates of that
    stream, so it coincides bit-for-bit with the leading columns of a full
    path only when ``start == 0``.  The distribution is correct for any
    ``start`` because the cell variances are evaluated at their true
    positions.
    """
    if not isinstance(start, int) or start < 0:
        raise ConfigError(f"start must be a nonnegative integer, got {start!r}")
    if not isinstance(count, int) or count < 1:
        raise ConfigError(f"count must be a positive integer, got {count!r}")
    if start + count > config.n:
        raise ConfigError(
            f"window [{start + 1}, {start + count}] overruns the sample: "
            f"start + count = {start + count} > n = {config.n}"
        )
    p = config.p
    variances = _variance_profile(
        model,
        config.n,
        start,
        count,
        p,
        lambda: _substream(config.seed, replication, p),
    )
    noise = np.empty((p, count))
    for j in range(p):
        noise[j] = _substream(config.seed, replication, j).standard_normal(count)
    return np.sqrt(variances) * noise


def simulate_path(
    config: GridConfig,
    model: VolModel,
    drift: Optional[Sequence[float]] = None,
    replication: int = 0,
) -> PricePath:
    """Simulate one full path of ``n`` increments started at zero.

    Parameters
    ----------
    config, model
        Grid and volatility specification.
    drift
        Optional constant drift vector of length ``p``; each cell's increment
        mean is shifted by ``drift[j] / n``.  Off (zero) by default, matching
        the driftless model the estimators target.
    replication
        Monte Carlo replication index selecting the substream family.
    """
    incr = simulate_window_increments(config, model, 0, config.n, replication)
    if drift is not None:
        b = np.asarray(drift, dtype=float)
        if b.shape != (config.p,):
            raise ConfigError(f"drift has shape {b.shape}, expected ({config.p},)")
        if not np.all(np.isfinite(b)):
            raise ConfigError("drift entries must be finite")
        incr = incr + b[:, None] / config.n
    values = np.empty((config.p, config.n + 1))
    values[:, 0] = 0.0
    np.cumsum(incr, axis=1, out=values[:, 1:])
    grid = np.arange(config.n + 1) / config.n
    return PricePath(grid=grid, values=values, model=model, config=config)


def increments(path: PricePath) -> np.ndarray:
    """Return the ``p x n`` increment matrix; column ``i`` is ``X_{(i+1)/n} - X_{i/n}``."""
    return np.diff(path.values, axis=1)


def write_path_csv(path: PricePath, stream: Union[str, TextIO]) -> None:
    """Write a path as CSV with header ``t,x1,...,xp`` and one row per grid point."""
    header = ["t"] + [f"x{j + 1}" for j in range(path.config.p)]
    table = np.column_stack([path.grid, path.values.T])
    _write_rows(stream, header, table)


def read_path_csv(stream: Union[str, TextIO]) -> tuple[np.ndarray, np.ndarray]:
    """Read a path CSV back into ``(grid, values)`` with ``values`` of shape ``p x (n+1)``.

    The file must carry the ``t,x1,...,xp`` header produced by
    :func:`write_path_csv`.
    """
    close = False
    if isinstance(stream, str):
        stream = open(stream, newline="")
        close = True
    try:
        reader = csv.reader(stream)
        try:
            header = next(reader)
        except StopIteration:
            raise ConfigError("path CSV is empty") from None
        if len(header) < 2 or header[0] != "t" or header[1] != "x1":
            raise ConfigError(f"unrecognised path CSV header: {header!r}")
        try:
            rows = np.array([[float(v) for v in row] for row in reader if row])
        except ValueError as exc:
            raise ConfigError(f"malformed path CSV: {exc}") from None
    finally:
        if close:
            stream.close()
    if rows.ndim != 2 or rows.shape[0] < 2 or rows.shape[1] != len(header):
        raise ConfigError("path CSV must contain at least two complete rows")
    return rows[:, 0], rows[:, 1:].T


def _write_rows(stream: Union[str, TextIO], header: list[str], table: np.ndarray) -> None:
    close = False
    if isinstance(stream, str):
        stream = open(stream, "w", newline="")
        close = True
    try:
        writer = csv.writer(stream)
        writer.writerow(header)
        for row in table:
            writer.writerow([repr(float(v)) for v in row])
    finally:
        if close:
            stream.close()

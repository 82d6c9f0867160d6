r"""Realized covariance estimators built from high-frequency increments.

Given increments :math:`\Delta_i X = X_{i/n} - X_{(i-1)/n}` of a
:math:`p`-dimensional semimartingale observed on an equidistant grid, this
module forms

* the realized integrated covariance
  :math:`\sum_{i=1}^{n} (\Delta_i X)(\Delta_i X)^\top`, and
* the local spot covariance estimate at time :math:`t`,

  .. math::

     \widehat{c}_t \;=\; \frac{n}{k_n} \sum_{i=\lfloor tn\rfloor + 1}^{\lfloor tn\rfloor + k_n}
     (\Delta_i X)(\Delta_i X)^\top ,

  which averages :math:`k_n` rescaled outer products over a shrinking window
  right of :math:`t`.

The spot estimate is the input to the spectral tests: its aspect ratio
``z_n = p / k_n`` plays the role of the concentration index in the
Marchenko--Pastur approximation of its eigenvalue distribution.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import TextIO, Union

import numpy as np

from .errors import ConfigError

__all__ = [
    "SpotEstimate",
    "realized_integrated_vol",
    "spot_vol",
    "spot_vol_from_window",
    "rescale",
    "write_matrix_csv",
    "read_matrix_csv",
]

# Relative asymmetry tolerated in a user-supplied estimate matrix.
_SYMMETRY_RTOL = 1e-8


@dataclass(frozen=True)
class SpotEstimate:
    """A spot covariance estimate plus the window metadata the tests need.

    Attributes
    ----------
    matrix
        The ``p x p`` symmetric estimate.
    t
        Time the window is anchored at.
    k_n
        Number of increments averaged.
    z_n
        Aspect ratio ``p / k_n``.
    window
        1-based increment index range ``(first, last)`` that was averaged.
    """

    matrix: np.ndarray
    t: float
    k_n: int
    z_n: float
    window: tuple[int, int]

    def __post_init__(self) -> None:
        m = np.asarray(self.matrix, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] < 1:
            raise ConfigError(f"estimate matrix must be square, got shape {m.shape}")
        if not np.all(np.isfinite(m)):
            raise ConfigError("estimate matrix contains non-finite entries")
        scale = np.max(np.abs(m))
        asym = np.max(np.abs(m - m.T))
        if asym > _SYMMETRY_RTOL * max(scale, 1e-300):
            raise ConfigError(
                f"estimate matrix is asymmetric: max |A - A^T| = {asym:.3e} "
                f"exceeds {_SYMMETRY_RTOL:.1e} * max |A| = {_SYMMETRY_RTOL * scale:.3e}"
            )
        if not isinstance(self.k_n, int) or self.k_n < 1:
            raise ConfigError(f"k_n must be a positive integer, got {self.k_n!r}")
        if self.z_n != m.shape[0] / self.k_n:
            raise ConfigError(
                f"z_n = {self.z_n!r} inconsistent with p / k_n = {m.shape[0] / self.k_n!r}"
            )
        object.__setattr__(self, "matrix", m)

    @property
    def p(self) -> int:
        """Matrix dimension."""
        return self.matrix.shape[0]


def _symmetrized_outer(block: np.ndarray) -> np.ndarray:
    # (M + M^T)/2 with a power-of-two factor: exactly symmetric output.
    m = block @ block.T
    return 0.5 * (m + m.T)


def realized_integrated_vol(incr: np.ndarray) -> np.ndarray:
    """Sum of increment outer products over the whole sample.

    Parameters
    ----------
    incr
        ``p x n`` increment matrix.

    Returns
    -------
    numpy.ndarray
        The ``p x p`` symmetric realized covariance
        :math:`\\sum_i (\\Delta_i X)(\\Delta_i X)^\\top`.
    """
    incr = _validated_increments(incr)
    return _symmetrized_outer(incr)


def spot_vol(incr: np.ndarray, t: float, k_n: int) -> SpotEstimate:
    """Local spot covariance estimate from a window of ``k_n`` increments.

    Parameters
    ----------
    incr
        ``p x n`` increment matrix for the full sample.
    t
        Anchor time in ``[0, 1]``; the window covers increments
        ``floor(t*n) + 1 .. floor(t*n) + k_n``.
    k_n
        Window length; the window must fit inside the sample.

    Returns
    -------
    SpotEstimate
        ``(n / k_n)`` times the symmetrized sum of outer products over the
        window, with the window metadata attached.

    Raises
    ------
    ConfigError
        If the window overruns the sample or the inputs are malformed.
    """
    incr = _validated_increments(incr)
    n = incr.shape[1]
    if not isinstance(k_n, int) or k_n < 1:
        raise ConfigError(f"k_n must be a positive integer, got {k_n!r}")
    if not math.isfinite(t) or t < 0.0:
        raise ConfigError(f"t must be finite and nonnegative, got {t!r}")
    start = int(math.floor(t * n))
    if start + k_n > n:
        raise ConfigError(
            f"spot window [{start + 1}, {start + k_n}] overruns the sample: "
            f"floor(t*n) + k_n = {start + k_n} > n = {n}"
        )
    return spot_vol_from_window(incr[:, start : start + k_n], n, t, k_n)


def spot_vol_from_window(
    window: np.ndarray, n: int, t: float, k_n: int
) -> SpotEstimate:
    """Spot estimate from an already-extracted ``p x k_n`` window block.

    ``n`` is the full-sample size the ``n / k_n`` rescaling refers to; the
    window is assumed to start at increment ``floor(t*n) + 1``.
    """
    window = np.asarray(window, dtype=float)
    if window.ndim != 2 or window.shape[1] != k_n:
        raise ConfigError(
            f"window block must have k_n = {k_n} columns, got shape {window.shape}"
        )
    start = int(math.floor(t * n))
    matrix = (n / k_n) * _symmetrized_outer(window)
    return SpotEstimate(
        matrix=matrix,
        t=t,
        k_n=k_n,
        z_n=window.shape[0] / k_n,
        window=(start + 1, start + k_n),
    )


def rescale(estimate: SpotEstimate, factor: float) -> SpotEstimate:
    """Return the estimate with its matrix multiplied by ``factor``.

    Used to express an estimate in null units (for instance dividing by the
    hypothesised variance level so the null population becomes the identity).
    """
    if not math.isfinite(factor) or factor <= 0.0:
        raise ConfigError(f"scale factor must be finite and positive, got {factor!r}")
    return SpotEstimate(
        matrix=estimate.matrix * factor,
        t=estimate.t,
        k_n=estimate.k_n,
        z_n=estimate.z_n,
        window=estimate.window,
    )


def _validated_increments(incr: np.ndarray) -> np.ndarray:
    incr = np.asarray(incr, dtype=float)
    if incr.ndim != 2 or incr.shape[0] < 1 or incr.shape[1] < 1:
        raise ConfigError(f"increment matrix must be 2-D p x n, got shape {incr.shape}")
    if not np.all(np.isfinite(incr)):
        raise ConfigError("increment matrix contains non-finite entries")
    return incr


def write_matrix_csv(matrix: np.ndarray, stream: Union[str, TextIO]) -> None:
    """Write a square matrix as CSV, row-major, with header ``c1,...,cp``."""
    matrix = np.asarray(matrix, dtype=float)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise ConfigError(f"expected a square matrix, got shape {matrix.shape}")
    close = False
    if isinstance(stream, str):
        stream = open(stream, "w", newline="")
        close = True
    try:
        writer = csv.writer(stream)
        writer.writerow([f"c{j + 1}" for j in range(matrix.shape[1])])
        for row in matrix:
            writer.writerow([repr(float(v)) for v in row])
    finally:
        if close:
            stream.close()


def read_matrix_csv(stream: Union[str, TextIO]) -> np.ndarray:
    """Read a square matrix written by :func:`write_matrix_csv`."""
    close = False
    if isinstance(stream, str):
        stream = open(stream, newline="")
        close = True
    try:
        reader = csv.reader(stream)
        try:
            header = next(reader)
        except StopIteration:
            raise ConfigError("matrix CSV is empty") from None
        if not header or header[0] != "c1":
            raise ConfigError(f"unrecognised matrix CSV header: {header!r}")
        try:
            rows = np.array([[float(v) for v in row] for row in reader if row])
        except ValueError as exc:
            raise ConfigError(f"malformed matrix CSV: {exc}") from None
    finally:
        if close:
            stream.close()
    if rows.ndim != 2 or rows.shape[0] != rows.shape[1] or rows.shape[1] != len(header):
        raise ConfigError(f"matrix CSV is not square: shape {rows.shape}")
    return rows

"""Eigenvalue extraction and empirical spectral distribution utilities.

A covariance estimate enters as a symmetric positive semidefinite matrix and
leaves as a sorted spectrum; the empirical spectral distribution (ESD) of
that spectrum is what gets compared against limiting laws.  Tiny negative
eigenvalues caused by round-off are clamped to zero, while genuinely negative
spectra are rejected as numerical failures.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Callable, TextIO, Union

import numpy as np

from .errors import ConfigError, NumericalError

__all__ = [
    "SpectralSample",
    "eigenvalues_sym",
    "esd_eval",
    "kolmogorov_distance",
    "write_esd_csv",
]

# Relative asymmetry accepted before a matrix is rejected outright.
_ASYM_RTOL = 1e-8
# Eigenvalues below -_PSD_RTOL * ||A||_2 are a hard error; ones in
# [-_PSD_RTOL * ||A||_2, 0) are treated as round-off and clamped to zero.
_PSD_RTOL = 1e-10


@dataclass(frozen=True)
class SpectralSample:
    """Eigenvalues of one matrix, sorted in descending order.

    ``source_dim`` records the matrix dimension the spectrum came from (one
    eigenvalue per dimension, multiplicities included).
    """

    eigenvalues: np.ndarray
    source_dim: int

    def __post_init__(self) -> None:
        lam = np.asarray(self.eigenvalues, dtype=float)
        if lam.ndim != 1 or lam.size < 1:
            raise ConfigError(f"eigenvalues must be a nonempty 1-D array, got shape {lam.shape}")
        if not np.all(np.isfinite(lam)):
            raise ConfigError("eigenvalues contain non-finite entries")
        if np.any(np.diff(lam) > 0.0):
            raise ConfigError("eigenvalues must be sorted in descending order")
        if self.source_dim != lam.size:
            raise ConfigError(
                f"source_dim = {self.source_dim} does not match {lam.size} eigenvalues"
            )
        object.__setattr__(self, "eigenvalues", lam)


def eigenvalues_sym(matrix: np.ndarray) -> SpectralSample:
    """Spectrum of a symmetric positive semidefinite matrix.

    The input may be asymmetric up to ``1e-8`` relative round-off (it is
    re-symmetrized before decomposition).  Eigenvalues within
    ``1e-10 * ||A||_2`` of zero are snapped to exactly zero: a rank-deficient
    matrix has its zero eigenvalues returned by LAPACK as values of order
    ``±eps * ||A||_2``, and leaving the positive half of that noise in place
    would smear a point mass at zero across distinct tiny values.  Anything
    below the band raises :class:`~spotspectra.errors.NumericalError` because
    the matrix is not a plausible covariance.
    """
    m = np.asarray(matrix, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] < 1:
        raise ConfigError(f"matrix must be square, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ConfigError("matrix contains non-finite entries")
    scale = np.max(np.abs(m))
    asym = np.max(np.abs(m - m.T))
    if asym > _ASYM_RTOL * max(scale, 1e-300):
        raise ConfigError(
            f"matrix is asymmetric: max |A - A^T| = {asym:.3e} exceeds "
            f"{_ASYM_RTOL:.1e} * max |A| = {_ASYM_RTOL * scale:.3e}"
        )
    sym = 0.5 * (m + m.T)
    try:
        lam = np.linalg.eigvalsh(sym)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"eigenvalue decomposition failed: {exc}") from exc
    spectral_norm = max(abs(lam[0]), abs(lam[-1]))
    if lam[0] < -_PSD_RTOL * spectral_norm:
        raise NumericalError(
            f"matrix is not positive semidefinite: min eigenvalue {lam[0]:.6e} "
            f"below -{_PSD_RTOL:.1e} * ||A||_2 = {-_PSD_RTOL * spectral_norm:.6e}"
        )
    lam = np.where(np.abs(lam) <= _PSD_RTOL * spectral_norm, 0.0, lam)
    return SpectralSample(eigenvalues=lam[::-1].copy(), source_dim=m.shape[0])


def esd_eval(sample: SpectralSample, x: float) -> float:
    """Empirical spectral distribution at ``x``: fraction of eigenvalues ``<= x``."""
    asc = sample.eigenvalues[::-1]
    return float(np.searchsorted(asc, x, side="right")) / sample.source_dim


def kolmogorov_distance(sample: SpectralSample, cdf: Callable[[float], float]) -> float:
    """Supremum distance between the ESD and a reference distribution function.

    ``cdf`` may itself have jumps; left limits are therefore compared with
    left limits, by evaluating both functions just below each eigenvalue.
    The supremum of ``|ESD - cdf|`` over the whole line is attained at an
    eigenvalue from one side or the other, which is what is scanned here.
    """
    asc = np.unique(sample.eigenvalues)
    p = sample.source_dim
    dist = 0.0
    for lam in asc:
        right = float(np.searchsorted(sample.eigenvalues[::-1], lam, side="right")) / p
        left = float(np.searchsorted(sample.eigenvalues[::-1], lam, side="left")) / p
        f_right = float(cdf(float(lam)))
        f_left = float(cdf(float(np.nextafter(lam, -np.inf))))
        dist = max(dist, abs(right - f_right), abs(left - f_left))
    return dist


def write_esd_csv(sample: SpectralSample, stream: Union[str, TextIO]) -> None:
    """Write the ESD jump points as CSV rows ``x, esd`` (post-jump values)."""
    close = False
    if isinstance(stream, str):
        stream = open(stream, "w", newline="")
        close = True
    try:
        writer = csv.writer(stream)
        writer.writerow(["x", "esd"])
        for lam in np.unique(sample.eigenvalues):
            writer.writerow([repr(float(lam)), repr(esd_eval(sample, float(lam)))])
    finally:
        if close:
            stream.close()

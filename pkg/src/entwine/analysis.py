"""Error analysis over field data: one-step residuals, convergence studies,
log-log slope fits, sample-vs-exact distances, and contour-grid extraction.

The central quantity is the relative one-step residual: how far a stored
slice t is from the update rule applied to slice t-1 of the same data, with
the ensemble parameter alpha (not a refit).  Exact ensemble fields satisfy
the recursion identically, so their residual vanishes to rounding; sampled
fields leave a defect that shrinks as the pair count grows.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .evolver import step_dense
from .lattice import FieldSet, SampleFieldSet, SimConfig, normalize
from .sampler import sample_ensemble

__all__ = [
    "ErrorSeries",
    "SlopeFit",
    "residual",
    "convergence_study",
    "fit_slope",
    "compare_to_exact",
    "contour_grid",
    "DEFAULT_CHECKPOINTS",
    "DEFAULT_TIMES",
]

DEFAULT_CHECKPOINTS = tuple(2 ** k for k in range(4, 18))
DEFAULT_TIMES = (2, 8, 16)


@dataclass
class ErrorSeries:
    """Residual records (n_pairs, t, i, E), one per defined combination."""

    entries: list[tuple[int, int, int, float]]

    def select(self, t: int, i: int) -> tuple[np.ndarray, np.ndarray]:
        """All (n, E) rows for one (t, i), in increasing n."""
        rows = sorted((n, e) for (n, tt, ii, e) in self.entries
                      if tt == t and ii == i)
        n = np.array([r[0] for r in rows], dtype=np.int64)
        e = np.array([r[1] for r in rows], dtype=np.float64)
        return n, e

    def times(self) -> list[int]:
        return sorted({t for (_, t, _, _) in self.entries})


@dataclass
class SlopeFit:
    """Least-squares line through (log n, log E)."""

    slope: float
    intercept: float
    rms: float
    n_points: int


def residual(sample, t: int, i: int, alpha: float):
    """Relative L2 defect of slice (i, t) against the rule applied to t-1.

    Works on sampled counts or exact fields (the ratio is scale invariant).
    Returns None when the denominator slice is all zero (undefined; callers
    exclude such points).
    """
    if not 1 <= t <= sample.t_max:
        raise ValueError(f"t must lie in [1, {sample.t_max}], got {t}")
    if not 1 <= i <= 4:
        raise ValueError(f"field index must be 1..4, got {i}")
    cur = sample.data[i - 1, t, :].astype(np.float64)
    den = float(np.linalg.norm(cur))
    if den == 0.0:
        return None
    prev = sample.data[:, t - 1, :].astype(np.float64)
    predicted = step_dense(prev, alpha)[i - 1]
    return float(np.linalg.norm(cur - predicted) / den)


def convergence_study(config: SimConfig, checkpoints=None, times=DEFAULT_TIMES,
                      fast: bool = True) -> ErrorSeries:
    """Residuals at geometrically spaced pair counts for the given times.

    Default checkpoints are powers of two from 16 up to config.n_pairs.
    Entries with an undefined residual (empty slice) are omitted.
    """
    if checkpoints is None:
        checkpoints = [c for c in DEFAULT_CHECKPOINTS if c <= config.n_pairs]
        if not checkpoints:
            raise ValueError(
                f"n_pairs={config.n_pairs} below the smallest default "
                f"checkpoint {DEFAULT_CHECKPOINTS[0]}; pass checkpoints")
    times = sorted(set(int(t) for t in times))
    for t in times:
        if not 1 <= t <= config.t_ret:
            raise ValueError(f"requested time {t} outside 1..{config.t_ret}")

    samples = sample_ensemble(config, checkpoints=checkpoints, fast=fast)
    entries = []
    for n in sorted(checkpoints):
        snap = samples[n]
        for t in times:
            for i in (1, 2, 3, 4):
                e = residual(snap, t, i, config.alpha)
                if e is not None:
                    entries.append((n, t, i, e))
    return ErrorSeries(entries)


def fit_slope(series: ErrorSeries, t: int, i: int) -> SlopeFit:
    """OLS slope/intercept of log E vs log n for one (t, i).

    Zero residual entries cannot be logged and are dropped; at least three
    usable points are required.
    """
    n, e = series.select(t, i)
    keep = e > 0.0
    n, e = n[keep], e[keep]
    if n.size < 3:
        raise ValueError(
            f"slope fit needs >= 3 positive entries at t={t}, i={i}; "
            f"have {n.size}")
    ln, le = np.log(n.astype(np.float64)), np.log(e)
    slope, intercept = np.polyfit(ln, le, 1)
    resid = le - (slope * ln + intercept)
    return SlopeFit(float(slope), float(intercept),
                    float(np.sqrt(np.mean(resid ** 2))), int(n.size))


def compare_to_exact(sample: SampleFieldSet, exact: FieldSet, t: int, i: int):
    """||normalize(sample) - exact|| / ||exact|| at one (i, t) slice.

    Returns None when the exact slice is all zero (distance undefined).
    """
    if sample.t_max != exact.t_max:
        raise ValueError(
            f"shape mismatch: sample t_max={sample.t_max}, "
            f"exact t_max={exact.t_max}")
    ref = exact.data[i - 1, t, :]
    den = float(np.linalg.norm(ref))
    if den == 0.0:
        return None
    approx = normalize(sample).data[i - 1, t, :]
    return float(np.linalg.norm(approx - ref) / den)


def contour_grid(fields, i: int) -> np.ndarray:
    """Dense (t, z) grid of one field component, ready for CSV export."""
    if not 1 <= i <= 4:
        raise ValueError(f"field index must be 1..4, got {i}")
    return np.array(fields.data[i - 1], dtype=np.float64, copy=True)

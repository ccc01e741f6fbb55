"""Field storage on the discrete (z, t) light-cone lattice.

Units are c = 1 with unit steps in both z and t.  Four charge-density fields
phi1..phi4 live on lattice sites; slice t of each field records the links that
*depart* time t (the committed direction and signed charge of a walker sitting
at (t, z)).  From a point seed at the origin only sites with z + t even and
|z| <= t can be occupied.

Fields 1, 2 form the left system (seeded with charge -1 moving left) and
fields 3, 4 the right system (charge +1 moving right); odd indices are
left-moving links, even indices right-moving.
"""

from __future__ import annotations

from dataclasses import dataclass, asdict

import numpy as np

__all__ = [
    "SimConfig",
    "FieldSet",
    "SampleFieldSet",
    "initial_condition",
    "slice_norm",
    "normalize",
    "on_parity",
]

MODES = ("iid", "balanced")
SAMPLERS = ("envelope", "eve")


@dataclass(frozen=True)
class SimConfig:
    """Run parameters shared by the evolver, samplers and CLI.

    alpha is the per-step scattering probability (the ensemble parameter a
    times the unit time step).  t_ret is the return-time horizon: envelope
    walks record slices 0..t_ret, entwined pairs close at the first marker at
    or beyond t_ret.  All randomness derives from (seed, worker).
    """

    alpha: float = 0.5
    t_ret: int = 16
    n_pairs: int = 1
    mode: str = "iid"
    seed: int = 0
    workers: int = 1
    sampler: str = "envelope"

    def __post_init__(self):
        if not 0.0 <= float(self.alpha) <= 1.0:
            raise ValueError(f"alpha must lie in [0, 1], got {self.alpha}")
        if int(self.t_ret) < 1:
            raise ValueError(f"t_ret must be >= 1, got {self.t_ret}")
        if int(self.n_pairs) < 1:
            raise ValueError(f"n_pairs must be >= 1, got {self.n_pairs}")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.sampler not in SAMPLERS:
            raise ValueError(
                f"sampler must be one of {SAMPLERS}, got {self.sampler!r}"
            )
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError(f"seed must be a 64-bit unsigned integer, got {self.seed}")
        if int(self.workers) < 1:
            raise ValueError(f"workers must be >= 1, got {self.workers}")

    def to_dict(self) -> dict:
        return asdict(self)


def on_parity(t: int, z: int) -> bool:
    """True if (t, z) is reachable from the origin seed."""
    return abs(z) <= t and (z + t) % 2 == 0


class _FieldGrid:
    """Shared dense storage: array of shape (4, t_max + 1, 2 * t_max + 1).

    Axis 0 is the field index minus one, axis 1 is t, axis 2 is z + t_max.
    Public accessors take the 1-based field index used everywhere else.
    """

    def __init__(self, data: np.ndarray):
        data = np.asarray(data)
        if data.ndim != 3 or data.shape[0] != 4:
            raise ValueError(f"expected shape (4, t+1, 2t+1), got {data.shape}")
        t_max = data.shape[1] - 1
        if data.shape[2] != 2 * t_max + 1:
            raise ValueError(
                f"z extent {data.shape[2]} inconsistent with t_max {t_max}"
            )
        self.data = data

    @property
    def t_max(self) -> int:
        return self.data.shape[1] - 1

    @property
    def z_offset(self) -> int:
        return self.t_max

    def z_values(self) -> np.ndarray:
        return np.arange(-self.t_max, self.t_max + 1)

    def get(self, i: int, t: int, z: int):
        self._check_index(i, t)
        if abs(z) > self.t_max:
            raise ValueError(f"z={z} outside [-{self.t_max}, {self.t_max}]")
        return self.data[i - 1, t, z + self.z_offset]

    def slice(self, i: int, t: int) -> np.ndarray:
        """View of field i at time t, indexed by z + z_offset."""
        self._check_index(i, t)
        return self.data[i - 1, t]

    def _check_index(self, i: int, t: int):
        if not 1 <= i <= 4:
            raise ValueError(f"field index must be 1..4, got {i}")
        if not 0 <= t <= self.t_max:
            raise ValueError(f"t={t} outside stored range 0..{self.t_max}")


class FieldSet(_FieldGrid):
    """Exact (ensemble-mean) fields, float64."""

    @classmethod
    def zeros(cls, t_max: int) -> "FieldSet":
        if t_max < 0:
            raise ValueError("t_max must be >= 0")
        return cls(np.zeros((4, t_max + 1, 2 * t_max + 1), dtype=np.float64))

    def copy(self) -> "FieldSet":
        return FieldSet(self.data.copy())


class SampleFieldSet(_FieldGrid):
    """Accumulated Monte Carlo link counts (int64) plus the pair count."""

    def __init__(self, data: np.ndarray, pairs: int = 0):
        super().__init__(np.asarray(data, dtype=np.int64))
        if pairs < 0:
            raise ValueError("pairs must be >= 0")
        self.pairs = int(pairs)

    @classmethod
    def zeros(cls, t_max: int) -> "SampleFieldSet":
        if t_max < 0:
            raise ValueError("t_max must be >= 0")
        return cls(np.zeros((4, t_max + 1, 2 * t_max + 1), dtype=np.int64), 0)

    def copy(self) -> "SampleFieldSet":
        return SampleFieldSet(self.data.copy(), self.pairs)

    def merge(self, other: "SampleFieldSet") -> "SampleFieldSet":
        """Entrywise sum of counts and pair totals (worker merge)."""
        if other.t_max != self.t_max:
            raise ValueError(
                f"cannot merge t_max {other.t_max} into t_max {self.t_max}"
            )
        return SampleFieldSet(self.data + other.data, self.pairs + other.pairs)


def initial_condition(t_max: int = 0) -> FieldSet:
    """Seed fields: phi4 = +1 and phi1 = -1 at the origin, all else zero."""
    fields = FieldSet.zeros(t_max)
    fields.data[3, 0, fields.z_offset] = 1.0
    fields.data[0, 0, fields.z_offset] = -1.0
    return fields


def slice_norm(fields: _FieldGrid, i: int, t: int) -> float:
    """Euclidean norm over z of field i at time t."""
    return float(np.linalg.norm(np.asarray(fields.slice(i, t), dtype=np.float64)))


def normalize(sample: SampleFieldSet) -> FieldSet:
    """Counts divided by the number of accumulated pairs."""
    if sample.pairs == 0:
        raise ValueError("cannot normalize a sample with zero accumulated pairs")
    return FieldSet(sample.data.astype(np.float64) / float(sample.pairs))

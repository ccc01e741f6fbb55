"""Brute-force reference fields by explicit path enumeration.

Independently of the evolver's recursion and of the Monte Carlo walkers, this
module sums charge * weight over every scatter/no-scatter decision sequence of
length t_max (2**t_max sequences per system).  A walker starts at the origin
committed to its seed direction (left system: left, charge -1; right system:
right, charge +1); each step it moves one site along its committed direction,
then applies the step's decision: a scatter flips the direction and, exactly
when the new direction equals the seed direction, also flips the charge.  The
post-decision (direction, charge) is recorded at the site just reached.

A sequence with k scatters carries weight alpha**k * (1 - alpha)**(t_max - k);
the weights over all sequences sum to one.  Agreement of these sums with the
evolver output is the primary cross-check of the package.
"""

from __future__ import annotations

from .lattice import FieldSet

__all__ = ["enumerate_exact", "T_MAX_GUARD"]

T_MAX_GUARD = 20

# (seed direction, seed charge, field index for left-moving, for right-moving)
_SYSTEMS = (
    (-1, -1, 1, 2),  # left system: phi1 / phi2
    (+1, +1, 3, 4),  # right system: phi3 / phi4
)


def enumerate_exact(alpha: float, t_max: int) -> FieldSet:
    """Exact expected fields for slices 0..t_max by full enumeration.

    Cost doubles with every step; t_max is capped at T_MAX_GUARD (typical use
    stays at or below 12).
    """
    if not 0.0 <= float(alpha) <= 1.0:
        raise ValueError(f"alpha must lie in [0, 1], got {alpha}")
    if t_max < 0:
        raise ValueError(f"t_max must be >= 0, got {t_max}")
    if t_max > T_MAX_GUARD:
        raise ValueError(
            f"t_max={t_max} exceeds the enumeration guard ({T_MAX_GUARD})"
        )

    fields = FieldSet.zeros(t_max)
    off = fields.z_offset
    # weight by number of scatters, with 0**0 == 1 so alpha = 0 or 1 work
    wtab = [alpha**k * (1.0 - alpha) ** (t_max - k) for k in range(t_max + 1)]

    for seed_dir, seed_charge, idx_left, idx_right in _SYSTEMS:
        # committed seed state at the origin
        fields.data[(idx_left if seed_dir < 0 else idx_right) - 1, 0, off] += seed_charge
        for bits in range(1 << t_max):
            w = wtab[bits.bit_count()]
            if w == 0.0:
                continue
            z, d, q = 0, seed_dir, seed_charge
            for t in range(1, t_max + 1):
                z += d
                if (bits >> (t - 1)) & 1:
                    d = -d
                    if d == seed_dir:
                        q = -q
                i = idx_left if d < 0 else idx_right
                fields.data[i - 1, t, z + off] += w * q
    return fields

"""Monte Carlo estimation of the fields by sampled paths.

Two constructions of the same ensemble:

``envelope``
    Each logical pair is a left-system walker (seed: origin, moving left,
    charge -1) plus a right-system walker (origin, right, +1).  A walker
    repeats: move one site along its committed direction; draw a decision; on
    scatter flip the direction and, exactly when the new direction equals the
    seed direction, flip the charge; record the post-decision (direction,
    charge) at the site just reached.  Slice t therefore holds the links
    departing time t, and the ensemble mean obeys the evolver recursion at
    every step.

``eve``
    One decision tape per pair drives a single forward walk whose marks
    alternate between corners (odd marks) and markers (even marks).  The
    first marker at or beyond t_ret closes the pair; the return path descends
    to the origin through every marker.  Between consecutive markers the two
    strands span a rhombus: the forward strand corners at the mark position,
    the return strand at its time reflection, which forces closure at the
    origin.  Per-slice max/min of the two strands give the right/left
    envelopes, whose links are accumulated with sign +1 on forward segments
    and -1 on return segments.

Decision policies: ``iid`` scatters independently with probability alpha;
``balanced`` keeps a counter per local decision cell -- (system, t, z,
incoming direction, carried sign) -- and picks the symbol whose updated
frequency lands closest to alpha, breaking exact ties with the slot's
uniform.  The carried sign belongs in the cell key: walkers of opposite sign
meeting at one site must be steered separately, otherwise the signed field
keeps square-root noise even though the scatter counts are exact.  Decisions
without a carried sign (tape generation, pair growth) use sign 0.  Every
decision slot consumes exactly one double from the stream regardless of
policy, which keeps the scalar reference walkers and the
vectorized/compiled fast paths on identical random streams.

Work is partitioned round-robin across workers (pair g belongs to worker
g mod workers); each worker owns a private stream, accumulator and counters,
and results merge by entrywise addition.  Output is bit-reproducible for a
fixed (seed, workers).
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import InternalCheckError
from .lattice import SampleFieldSet, SimConfig
from .rng import make_stream

__all__ = [
    "Tape",
    "generate_tape",
    "DecisionEngine",
    "balanced_decide",
    "EnvelopeState",
    "walk_envelope",
    "EntwinedPair",
    "build_entwined_pair",
    "EnvelopePath",
    "extract_envelopes",
    "accumulate_pair",
    "sample_ensemble",
]

# per-system constants: seed direction, seed charge, field index by link direction
_SYSTEM = {
    "left": (-1, -1, 1, 2),
    "right": (+1, +1, 3, 4),
}

_CHUNK = 1 << 16  # pairs per fast-path block


@dataclass
class Tape:
    """A realized decision sequence; True entries are marks (scatters)."""

    scatter: np.ndarray

    def __post_init__(self):
        self.scatter = np.asarray(self.scatter, dtype=bool)

    def __len__(self) -> int:
        return int(self.scatter.size)

    @property
    def symbols(self) -> str:
        return "".join("M" if s else "U" for s in self.scatter)

    @property
    def mark_fraction(self) -> float:
        return float(self.scatter.mean()) if self.scatter.size else 0.0


def balanced_decide(n_scatter: int, n_total: int, alpha: float, u: float) -> bool:
    """Pick the symbol whose updated frequency is closest to alpha.

    Returns True for a mark (scatter).  An exact tie is broken by the slot's
    uniform: u < 0.5 chooses the mark.
    """
    target = alpha * (n_total + 1.0)
    d_mark = abs(n_scatter + 1.0 - target)
    d_pass = abs(n_scatter - target)
    if d_mark < d_pass:
        return True
    if d_mark > d_pass:
        return False
    return u < 0.5


class DecisionEngine:
    """Scatter decisions for one worker: policy, stream, balanced counters.

    Counters are keyed by (system, t, z, direction, charge) and live only for
    the worker that owns this engine; cross-worker balancing is approximate by
    design.  Decisions that carry no charge (tape drawing, pair growth) pass
    charge 0.  ``decide`` consumes one uniform per call even when the balanced
    rule is forced, so streams advance identically under both policies.
    """

    def __init__(self, alpha: float, mode: str = "iid", stream=None):
        if not 0.0 <= float(alpha) <= 1.0:
            raise ValueError(f"alpha must lie in [0, 1], got {alpha}")
        if mode not in ("iid", "balanced"):
            raise ValueError(f"mode must be 'iid' or 'balanced', got {mode!r}")
        self.alpha = float(alpha)
        self.mode = mode
        self.stream = stream if stream is not None else make_stream(0, 0)
        self.counters: dict[tuple, list[int]] = {}

    def uniform(self) -> float:
        return float(self.stream.random())

    def decide(self, system: str, t: int, z: int, direction: int,
               charge: int = 0) -> bool:
        return self.decide_with(system, t, z, direction, charge, self.uniform())

    def decide_with(self, system, t, z, direction, charge, u: float) -> bool:
        if self.mode == "iid":
            return u < self.alpha
        key = (system, t, z, direction, charge)
        cnt = self.counters.get(key)
        if cnt is None:
            cnt = [0, 0]
            self.counters[key] = cnt
        scatter = balanced_decide(cnt[0], cnt[1], self.alpha, u)
        cnt[1] += 1
        if scatter:
            cnt[0] += 1
        return scatter


def generate_tape(engine: DecisionEngine, length: int) -> Tape:
    """Draw a tape of `length` symbols (balanced engines key by position)."""
    if length < 0:
        raise ValueError("length must be >= 0")
    flags = np.empty(length, dtype=bool)
    for pos in range(length):
        flags[pos] = engine.decide("tape", pos + 1, 0, +1)
    return Tape(flags)


@dataclass
class EnvelopeState:
    """Walker state: position, committed direction, carried charge, steps."""

    z: int = 0
    direction: int = +1
    charge: int = +1
    steps: int = 0


def walk_envelope(kind: str, engine: DecisionEngine, t_max: int,
                  sample: SampleFieldSet) -> EnvelopeState:
    """Walk one `kind` walker for t_max steps, accumulating into `sample`.

    Records the committed seed at t = 0 and one link per later slice.  Does
    not touch sample.pairs (a pair is one left plus one right walk).
    """
    if kind not in _SYSTEM:
        raise ValueError(f"kind must be 'left' or 'right', got {kind!r}")
    if sample.t_max < t_max:
        raise ValueError(
            f"sample holds slices 0..{sample.t_max}, cannot walk to {t_max}"
        )
    seed_dir, seed_charge, idx_left, idx_right = _SYSTEM[kind]
    off = sample.z_offset
    st = EnvelopeState(0, seed_dir, seed_charge, 0)
    sample.data[(idx_left if seed_dir < 0 else idx_right) - 1, 0, off] += seed_charge
    for t in range(1, t_max + 1):
        st.z += st.direction
        if engine.decide(kind, t, st.z, st.direction, st.charge):
            st.direction = -st.direction
            if st.direction == seed_dir:
                st.charge = -st.charge
        st.steps = t
        i = idx_left if st.direction < 0 else idx_right
        sample.data[i - 1, t, st.z + off] += st.charge
    return st


# ---------------------------------------------------------------------------
# entwined pairs ("eve" construction)
# ---------------------------------------------------------------------------

@dataclass
class EntwinedPair:
    """A closed pair: forward strand, return strand, markers.

    forward_z[t] and ret_z[t] give each strand's position for t = 0..t_star;
    both start at the origin and meet at (t_star, z_star).  markers are the
    osculation sites (even marks), the last one being the closing marker.
    """

    forward_z: np.ndarray
    ret_z: np.ndarray
    markers: list[tuple[int, int]]

    @property
    def t_star(self) -> int:
        return int(self.forward_z.size - 1)

    @property
    def z_star(self) -> int:
        return int(self.forward_z[-1])

    def forward_sites(self) -> list[tuple[int, int]]:
        return [(t, int(z)) for t, z in enumerate(self.forward_z)]

    def return_sites(self) -> list[tuple[int, int]]:
        """Return-path sites in traversal order (descending t)."""
        return [(t, int(self.ret_z[t])) for t in range(self.t_star, -1, -1)]


def build_entwined_pair(engine: DecisionEngine, t_ret: int) -> EntwinedPair:
    """Grow one closed pair from the engine's decision stream.

    The forward walk starts committed to the right; its odd marks are corners
    and its even marks are markers.  The first marker at t >= t_ret closes the
    walk.  The return strand is reconstructed rhombus by rhombus: between
    consecutive markers it corners at the time-reflected position of the
    forward corner, which lands it back at the origin exactly.
    """
    if t_ret < 1:
        raise ValueError(f"t_ret must be >= 1, got {t_ret}")
    if engine.alpha == 0.0:
        raise ValueError("entwined pairs need alpha > 0 (tape never closes)")

    z, d = 0, +1
    forward = [0]
    markers: list[tuple[int, int]] = []
    # current rhombus: bottom touch (t_b, z_b), forward direction out of it,
    # and the corner time once the odd mark arrives
    rhombi: list[tuple[int, int, int, int, int, int]] = []
    t_b, z_b, e_out = 0, 0, +1
    tau = None
    awaiting_corner = True
    t = 0
    while True:
        t += 1
        z += d
        forward.append(z)
        if engine.decide("eve", t, z, d):
            if awaiting_corner:
                tau = t
                d = -d
            else:
                markers.append((t, z))
                rhombi.append((t_b, z_b, tau, e_out, t, z))
                if t >= t_ret:
                    break
                t_b, z_b, e_out, tau = t, z, d, None
            awaiting_corner = not awaiting_corner

    forward_z = np.asarray(forward, dtype=np.int64)
    ret_z = np.empty_like(forward_z)
    for (tb, zb, tc, e, tt, zt) in rhombi:
        tr = tb + tt - tc  # reflected corner time of the return strand
        for s in range(tb, tr + 1):
            ret_z[s] = zb - e * (s - tb)
        for s in range(tr, tt + 1):
            ret_z[s] = ret_z[tr] + e * (s - tr)

    pair = EntwinedPair(forward_z, ret_z, markers)
    _check_pair(pair)
    return pair


def _check_pair(pair: EntwinedPair) -> None:
    """Cheap closure/validity checks; violations are construction bugs."""
    f, r = pair.forward_z, pair.ret_z
    if r[0] != 0 or f[0] != 0:
        raise InternalCheckError("pair strands do not start at the origin")
    if r[-1] != f[-1]:
        raise InternalCheckError("pair strands do not meet at the closing marker")
    if np.any(np.abs(np.diff(f)) != 1) or np.any(np.abs(np.diff(r)) != 1):
        raise InternalCheckError("pair strand leaves the light cone")
    for (t, zm) in pair.markers:
        if r[t] != zm or f[t] != zm:
            raise InternalCheckError("return path misses a marker")


@dataclass
class EnvelopePath:
    """One envelope of a pair: positions by slice, per-link colour (+-1)."""

    kind: str
    z: np.ndarray
    colour: np.ndarray  # length t_star, colour of link t -> t+1

    def link_directions(self) -> np.ndarray:
        return np.sign(np.diff(self.z)).astype(np.int64)


def extract_envelopes(pair: EntwinedPair) -> tuple[EnvelopePath, EnvelopePath]:
    """Per-slice min/max of the strands, coloured by strand membership.

    Forward links are +1 (the seed colour of the right envelope), return
    links -1.  Each envelope link must lie on exactly one strand; the two
    strands share sites only at markers, never whole links.
    """
    f, r = pair.forward_z, pair.ret_z
    z_right = np.maximum(f, r)
    z_left = np.minimum(f, r)
    out = []
    for kind, ze in (("left", z_left), ("right", z_right)):
        on_f = (f[:-1] == ze[:-1]) & (f[1:] == ze[1:])
        on_r = (r[:-1] == ze[:-1]) & (r[1:] == ze[1:])
        if np.any(on_f & on_r) or not np.all(on_f | on_r):
            raise InternalCheckError("envelope link not on exactly one strand")
        colour = np.where(on_f, 1, -1).astype(np.int64)
        out.append(EnvelopePath(kind, ze.copy(), colour))
    return out[0], out[1]


def accumulate_pair(pair: EntwinedPair, sample: SampleFieldSet, t_cap: int) -> None:
    """Add one pair's envelope links (departures at t <= t_cap) to `sample`."""
    left, right = extract_envelopes(pair)
    off = sample.z_offset
    top = min(pair.t_star - 1, t_cap)
    for env, idx_left, idx_right in ((left, 1, 2), (right, 3, 4)):
        dz = np.diff(env.z)
        for t in range(0, top + 1):
            i = idx_left if dz[t] < 0 else idx_right
            sample.data[i - 1, t, int(env.z[t]) + off] += int(env.colour[t])


# ---------------------------------------------------------------------------
# ensemble driver: workers, checkpoints, fast paths
# ---------------------------------------------------------------------------

def _worker_prefix(n: int, worker: int, workers: int) -> int:
    """How many of the first n global pairs land on this worker (round-robin)."""
    if n <= worker:
        return 0
    return (n - worker + workers - 1) // workers


def sample_ensemble(config: SimConfig, checkpoints=None, trace_file=None,
                    fast: bool = True):
    """Run the configured sampler.

    Without checkpoints returns the final SampleFieldSet; with a checkpoint
    list
    returns {n: SampleFieldSet} for each requested cumulative pair count (the
    final count is always included).  trace_file (eve mode only) receives one
    JSON line per pair.  fast=False forces the scalar reference walkers, which
    consume the random stream identically to the fast paths.
    """
    cps = sorted({int(c) for c in (checkpoints or [])} | {config.n_pairs})
    for c in cps:
        if not 1 <= c <= config.n_pairs:
            raise ValueError(f"checkpoint {c} outside 1..{config.n_pairs}")
    if trace_file is not None and config.sampler != "eve":
        raise ValueError("per-pair traces are only defined for the eve sampler")

    t_ret, workers = config.t_ret, config.workers
    merged = {n: SampleFieldSet.zeros(t_ret) for n in cps}
    sink = open(trace_file, "w") if trace_file is not None else None
    try:
        for w in range(workers):
            local_counts = [_worker_prefix(n, w, workers) for n in cps]
            snaps = _worker_run(config, w, local_counts, sink, fast)
            for n, snap in zip(cps, snaps):
                merged[n] = merged[n].merge(snap)
    finally:
        if sink is not None:
            sink.close()
    if checkpoints is None:
        return merged[config.n_pairs]
    return merged


def _worker_run(config: SimConfig, worker: int, counts, sink, fast):
    """Process one worker's pairs, snapshotting at each local prefix count."""
    stream = make_stream(config.seed, worker)
    sample = SampleFieldSet.zeros(config.t_ret)
    snaps: list[SampleFieldSet] = []

    if config.sampler == "eve":
        engine = DecisionEngine(config.alpha, config.mode, stream)
        done = 0
        for target in counts:
            while done < target:
                pair = build_entwined_pair(engine, config.t_ret)
                accumulate_pair(pair, sample, config.t_ret)
                sample.pairs += 1
                if sink is not None:
                    sink.write(json.dumps({
                        "pair": done * config.workers + worker,
                        "forward": pair.forward_sites(),
                        "markers": [[t, z] for t, z in pair.markers],
                        "ret": pair.return_sites(),
                    }) + "\n")
                done += 1
            snaps.append(sample.copy())
        return snaps

    # envelope mode
    use_kernel = fast and config.mode == "balanced" and _have_numba()
    use_vector = fast and config.mode == "iid"
    engine = None if (use_kernel or use_vector) else DecisionEngine(
        config.alpha, config.mode, stream)
    kc = _KernelCounters(config.t_ret) if use_kernel else None

    done = 0
    for target in counts:
        while done < target:
            block = min(target - done, _CHUNK)
            if use_vector:
                u = stream.random((block, 2, config.t_ret))
                _iid_block(u, config.alpha, sample)
            elif use_kernel:
                u = stream.random((block, 2, config.t_ret))
                _balanced_kernel()(u, kc.scatters, kc.totals, sample.data,
                                   config.alpha, config.t_ret)
            else:
                for _ in range(block):
                    walk_envelope("left", engine, config.t_ret, sample)
                    walk_envelope("right", engine, config.t_ret, sample)
            sample.pairs += block
            done += block
        snaps.append(sample.copy())
    return snaps


def _iid_block(u: np.ndarray, alpha: float, sample: SampleFieldSet) -> None:
    """Vectorized iid envelope walks for a block of pairs."""
    n, _, t_max = u.shape
    off = sample.z_offset
    nz = sample.data.shape[2]
    scat = u < alpha
    cum = np.cumsum(scat, axis=2)
    for sys, kind in enumerate(("left", "right")):
        seed_dir, seed_charge, idx_left, idx_right = _SYSTEM[kind]
        s = cum[:, sys, :]
        d = np.where(s % 2 == 0, seed_dir, -seed_dir)          # post-decision dir
        d_prev = np.concatenate(
            [np.full((n, 1), seed_dir, dtype=np.int64), d[:, :-1]], axis=1)
        z = np.cumsum(d_prev, axis=1)                           # position at step t
        flips = scat[:, sys, :] & (s % 2 == 0)
        q = seed_charge * np.where(np.cumsum(flips, axis=1) % 2 == 0, 1, -1)
        idx = np.where(d < 0, idx_left, idx_right) - 1
        t_idx = np.broadcast_to(np.arange(1, t_max + 1), (n, t_max))
        keys = (idx * (t_max + 1) + t_idx) * nz + (z + off)
        acc = np.bincount(keys.ravel(), weights=q.ravel(),
                          minlength=4 * (t_max + 1) * nz)
        sample.data += acc.astype(np.int64).reshape(4, t_max + 1, nz)
        seed_i = (idx_left if seed_dir < 0 else idx_right) - 1
        sample.data[seed_i, 0, off] += n * seed_charge


class _KernelCounters:
    """Dense balanced counters for the compiled kernel.

    Axes: [system, t, z, direction, charge] with direction and charge mapped
    -1 -> 0 and +1 -> 1.
    """

    def __init__(self, t_max: int):
        shape = (2, t_max + 1, 2 * t_max + 1, 2, 2)
        self.scatters = np.zeros(shape, dtype=np.int64)
        self.totals = np.zeros(shape, dtype=np.int64)


_numba_kernel = None


def _have_numba() -> bool:
    try:
        import numba  # noqa: F401
        return True
    except ImportError:
        return False


def _balanced_kernel():
    """Compile (once) and return the balanced envelope kernel."""
    global _numba_kernel
    if _numba_kernel is None:
        import numba

        @numba.njit(cache=True)
        def kernel(u, scatters, totals, fields, alpha, t_max):  # pragma: no cover
            n = u.shape[0]
            off = t_max
            for p in range(n):
                for sys in range(2):
                    if sys == 0:
                        seed_dir, charge, idx_left, idx_right = -1, -1, 0, 1
                    else:
                        seed_dir, charge, idx_left, idx_right = 1, 1, 2, 3
                    fields[idx_left if seed_dir < 0 else idx_right, 0, off] += charge
                    z = 0
                    d = seed_dir
                    for t in range(1, t_max + 1):
                        z += d
                        di = 0 if d < 0 else 1
                        qi = 0 if charge < 0 else 1
                        c = totals[sys, t, z + off, di, qi]
                        s = scatters[sys, t, z + off, di, qi]
                        target = alpha * (c + 1.0)
                        d_mark = abs(s + 1.0 - target)
                        d_pass = abs(s - target)
                        if d_mark < d_pass:
                            scatter = True
                        elif d_mark > d_pass:
                            scatter = False
                        else:
                            scatter = u[p, sys, t - 1] < 0.5
                        totals[sys, t, z + off, di, qi] = c + 1
                        if scatter:
                            scatters[sys, t, z + off, di, qi] = s + 1
                            d = -d
                            if d == seed_dir:
                                charge = -charge
                        fields[idx_left if d < 0 else idx_right, t, z + off] += charge
            return 0

        _numba_kernel = kernel
    return _numba_kernel

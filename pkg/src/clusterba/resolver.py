"""Exact resolution of the collision dynamics of a finite configuration.

`resolve` uses the event-driven core; `resolve_naive` is the quadratic
rescan oracle with an identical contract.  Both run the structural checks
(survivor velocity-monotonicity and particle conservation) on every outcome.
"""

from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np

from . import checks
from ._kernels import (TIE_MESSAGE, center_core, resolve_core,
                       resolve_core_naive, stats_core)
from .configs import LEFT, RIGHT, RIGHT_HALF_LINE, STILL, Configuration, sub_config

ARROW_ARROW = "arrow_arrow"
ARROW_CLUSTER = "arrow_cluster"

# first-particle fates
FATE_ARROW = "annihilated_with_arrow"
FATE_CLUSTER = "annihilated_with_cluster"
FATE_SURVIVED = "survived_window"
FATE_OTHER = "site_vacant_or_not_right_arrow"


class TieError(ValueError):
    """A genuine three-way collision-time tie; the dynamics are ambiguous."""


@dataclass(frozen=True)
class CollisionRecord:
    """One collision.  For arrow_arrow, site_a/site_b are the left/right
    arrow sites and remaining is None; for arrow_cluster they are the arrow
    and cluster sites and remaining is the cluster's multiplicity after the
    hit.  Sites are 1-based."""

    time: float
    position: float
    kind: str
    site_a: int
    site_b: int
    remaining: Optional[int] = None


@dataclass(frozen=True)
class Survivor:
    site: int
    species: str  # "left" | "right" | "cluster"
    remaining: int  # blockade units left; 0 for arrows


@dataclass(frozen=True)
class Outcome:
    collisions: List[CollisionRecord]
    survivors: List[Survivor]
    left_exit_times: List[float]
    side: str


@dataclass(frozen=True)
class RawOutcome:
    """Array view of an outcome, used by the Monte Carlo layer."""

    times: np.ndarray
    positions: np.ndarray
    kinds: np.ndarray      # 0 arrow-arrow, 1 arrow-cluster
    site_a: np.ndarray     # 0-based
    site_b: np.ndarray
    remaining: np.ndarray  # -1 for arrow-arrow records
    alive: np.ndarray
    rem: np.ndarray        # per-site remaining multiplicity

    @property
    def n_collisions(self):
        return self.times.size


@dataclass(frozen=True)
class TrialStats:
    """Per-trial summary without the collision log, for large campaigns.

    first_kind classifies the collision that removed entity at site 0
    (0-based): -1 never collided, 0 arrow-arrow, 1 arrow-cluster;
    first_partner is the 0-based cluster site for the latter when site 0
    held a right arrow."""

    alive: np.ndarray
    rem: np.ndarray
    n_aa: int
    n_ac: int
    units: int
    lefts: int
    rights: int
    first_kind: int
    first_partner: int


def resolve_stats(config: Configuration) -> TrialStats:
    """Resolve without building the collision log; runs the same structural
    checks as `resolve`."""
    try:
        (alive, rem, n_aa, n_ac, mono, units, lefts, rights,
         first_kind, first_partner, arrows0, units0) = stats_core(
            config.positions, config.velocities, config.sizes)
    except ValueError as exc:
        if TIE_MESSAGE in str(exc):
            raise TieError(TIE_MESSAGE) from exc
        raise
    ok = (bool(mono)
          and arrows0 - (lefts + rights) == 2 * n_aa + n_ac
          and units0 - units == n_ac)
    checks.record(ok)
    if not ok:
        raise checks.InvariantViolation(
            "structural invariant violated: monotone=%s arrows %d->%d "
            "units %d->%d collisions aa=%d ac=%d"
            % (bool(mono), arrows0, lefts + rights, units0, units, n_aa, n_ac))
    return TrialStats(alive, rem, int(n_aa), int(n_ac), int(units),
                      int(lefts), int(rights), int(first_kind),
                      int(first_partner))


def center_survives(config: Configuration, center: int) -> bool:
    """Whether the cluster at `center` is never collided with.

    Abandons the resolution at the first collision involving the center,
    which decides the trial; completed runs (center untouched) still get
    the full structural checks."""
    try:
        (hit, n_aa, n_ac, mono, units, lefts, rights,
         arrows0, units0) = center_core(
            config.positions, config.velocities, config.sizes, center)
    except ValueError as exc:
        if TIE_MESSAGE in str(exc):
            raise TieError(TIE_MESSAGE) from exc
        raise
    if hit:
        return False
    ok = (bool(mono)
          and arrows0 - (lefts + rights) == 2 * n_aa + n_ac
          and units0 - units == n_ac)
    checks.record(ok)
    if not ok:
        raise checks.InvariantViolation(
            "structural invariant violated: monotone=%s arrows %d->%d "
            "units %d->%d collisions aa=%d ac=%d"
            % (bool(mono), arrows0, lefts + rights, units0, units, n_aa, n_ac))
    return True


def collision_time(left: Tuple[float, int], right: Tuple[float, int]):
    """Meeting time of two entities given as (position, velocity), or None.

    Velocities are -1, 0, +1 and the left entity must start left of the
    right one."""
    (xa, va), (xb, vb) = left, right
    if xa >= xb:
        raise ValueError("left entity must start strictly left of right one")
    if va <= vb:
        return None
    return (xb - xa) / (va - vb)


def _run_core(positions, velocities, sizes, naive):
    core = resolve_core_naive if naive else resolve_core
    try:
        m, t, x, kind, a, b, rem_after, alive, rem, mono = core(
            positions, velocities, sizes)
    except ValueError as exc:
        if TIE_MESSAGE in str(exc):
            raise TieError(TIE_MESSAGE) from exc
        raise
    raw = RawOutcome(t[:m].copy(), x[:m].copy(), kind[:m].copy(),
                     a[:m].copy(), b[:m].copy(), rem_after[:m].copy(),
                     alive, rem)
    _check_invariants(raw, velocities, sizes, mono)
    return raw


def _check_invariants(raw, velocities, sizes, mono):
    n_ac = int((raw.kinds == 1).sum())
    n_aa = raw.n_collisions - n_ac
    live = raw.alive != 0
    arrows0 = int((velocities != STILL).sum())
    arrows1 = int((live & (velocities != STILL)).sum())
    units0 = int(sizes.sum())
    units1 = int(raw.rem[live & (velocities == STILL)].sum())
    ok = (mono
          and arrows0 - arrows1 == 2 * n_aa + n_ac
          and units0 - units1 == n_ac)
    checks.record(ok)
    if not ok:
        raise checks.InvariantViolation(
            "structural invariant violated: monotone=%s arrows %d->%d "
            "units %d->%d collisions aa=%d ac=%d"
            % (mono, arrows0, arrows1, units0, units1, n_aa, n_ac))


def resolve_raw(config: Configuration, naive: bool = False) -> RawOutcome:
    return _run_core(config.positions, config.velocities, config.sizes, naive)


def _build_outcome(config, raw):
    collisions = []
    for i in range(raw.n_collisions):
        if raw.kinds[i] == 0:
            collisions.append(CollisionRecord(
                float(raw.times[i]), float(raw.positions[i]), ARROW_ARROW,
                int(raw.site_a[i]) + 1, int(raw.site_b[i]) + 1))
        else:
            collisions.append(CollisionRecord(
                float(raw.times[i]), float(raw.positions[i]), ARROW_CLUSTER,
                int(raw.site_a[i]) + 1, int(raw.site_b[i]) + 1,
                int(raw.remaining[i])))
    survivors = []
    for i in np.nonzero(raw.alive)[0]:
        v = config.velocities[i]
        species = "left" if v == LEFT else ("right" if v == RIGHT else "cluster")
        survivors.append(Survivor(int(i) + 1, species, int(raw.rem[i])))
    exits = []
    if config.side == RIGHT_HALF_LINE:
        mask = (raw.alive != 0) & (config.velocities == LEFT)
        # a surviving left arrow crosses the origin at its starting distance
        exits = sorted(float(x - config.origin)
                       for x in config.positions[mask])
    return Outcome(collisions, survivors, exits, config.side)


def resolve(config: Configuration) -> Outcome:
    """Resolve with the event-driven scheduler."""
    return _build_outcome(config, resolve_raw(config))


def resolve_naive(config: Configuration) -> Outcome:
    """Oracle: same contract, quadratic full-rescan implementation."""
    return _build_outcome(config, resolve_raw(config, naive=True))


def origin_visited_by_left(outcome: Outcome):
    """(visited, count) of left arrows crossing the origin."""
    if outcome.side != RIGHT_HALF_LINE:
        raise ValueError("origin visits are defined on the right half-line")
    count = len(outcome.left_exit_times)
    return count >= 1, count


def first_particle_fate(outcome: Outcome, config: Configuration):
    """Classify the fate of site 1 when it is a right arrow.

    Returns (fate, initial_cluster_size) with the size filled only for
    FATE_CLUSTER."""
    if outcome.side != RIGHT_HALF_LINE:
        raise ValueError("first-particle fate is defined on the right half-line")
    if config.n == 0 or config.velocities[0] != RIGHT:
        return FATE_OTHER, None
    for rec in outcome.collisions:
        if rec.site_a == 1:
            if rec.kind == ARROW_ARROW:
                return FATE_ARROW, None
            return FATE_CLUSTER, int(config.sizes[rec.site_b - 1])
    return FATE_SURVIVED, None


def surviving_counts(outcome: Outcome):
    """(blockade units, left arrows, right arrows) among survivors."""
    units = sum(s.remaining for s in outcome.survivors if s.species == "cluster")
    lefts = sum(1 for s in outcome.survivors if s.species == "left")
    rights = sum(1 for s in outcome.survivors if s.species == "right")
    return units, lefts, rights


def W_statistic(config: Configuration, j: int, k: int) -> int:
    """Surviving blockade units minus surviving arrows in the window j..k,
    resolved in isolation."""
    window = sub_config(config, j, k)
    st = resolve_stats(window)
    return st.units - (st.lefts + st.rights)

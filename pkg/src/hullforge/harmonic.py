"""Walk-on-spheres harmonic measure on perforated discs.

A walk jumps from z to a uniform point on the largest circle around z
that stays inside the domain; it is absorbed once that radius drops
under eps_boundary, and the absorbed point is attributed to the nearest
boundary component.  Walks run in fixed-size chunks, each chunk seeded
deterministically from (seed, chunk index), and merging is plain
integer addition, so estimates are bit-identical regardless of how
chunks are distributed over threads.

The certified lower bounds run on domains whose holes were enlarged to
a visible floor: the true scheduled radii are dyadic dust far below
float resolution, and enlarging a hole can only shrink both the
outer-circle and the arc measure (the walk gets absorbed earlier), so
every enlarged estimate is an honest lower bound for the stated
threshold.  Certificates record the original exponents next to the
floored radii.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

from .certificates import Certificate
from .geometry import Arc, GeometryError, Hole, PerforatedDisc
from .thinness import RadiiSchedule, ThinnessCertificate, dyadic

__all__ = [
    "MeasureError",
    "WalkConfig",
    "MeasureEstimate",
    "AbsorptionProfile",
    "OuterCircle",
    "OuterArc",
    "HoleBoundaries",
    "simulate",
    "estimate",
    "exact_annulus",
    "build_arena",
    "verify_outer_bound",
    "verify_arc_bound",
    "HOLE_FLOOR",
]

# enlargement floor for sub-resolution holes; > 10x the default
# absorption distance so the WalkConfig invariant stays satisfiable
HOLE_FLOOR = 2e-5

# walks that exceed max_steps count as non-hits; more than this fraction
# of them invalidates the estimate outright
LOST_LIMIT = 1e-3

_LOST = -1  # component code for walks that never absorbed
_TWO_PI = 2.0 * math.pi


class MeasureError(ValueError):
    """Raised for invalid walk configurations, domains, or lost estimates."""


@dataclass(frozen=True)
class WalkConfig:
    """Monte Carlo parameters; the seed is mandatory by design."""

    n_walks: int
    rng_seed: int
    eps_boundary: float = 1e-6
    max_steps: int = 10**6
    chunk_size: int = 4096
    threads: int = 1

    def __post_init__(self) -> None:
        if self.n_walks < 100:
            raise MeasureError(f"n_walks below minimum 100: {self.n_walks}")
        if not 0 < self.eps_boundary < 1:
            raise MeasureError(f"bad eps_boundary {self.eps_boundary}")
        if self.max_steps < 1:
            raise MeasureError("max_steps must be positive")
        if not 0 <= self.rng_seed < 2**64:
            raise MeasureError("rng_seed must fit in 64 bits")
        if self.chunk_size < 1 or self.threads < 1:
            raise MeasureError("chunk_size and threads must be positive")


# --- target sets ---


@dataclass(frozen=True)
class OuterCircle:
    pass


@dataclass(frozen=True)
class OuterArc:
    """Union of rotated copies of the base arc; copies are turn offsets."""

    k0: int
    n0: int
    copies: tuple = (0,)


@dataclass(frozen=True)
class HoleBoundaries:
    indices: tuple


@dataclass(frozen=True)
class MeasureEstimate:
    value: float
    stderr: float
    n_walks: int
    hits: tuple  # absorbed per component: index 0 outer, then holes
    target_hits: int
    lost: int
    seed: int

    def three_sigma(self) -> float:
        return 3.0 * self.stderr


@dataclass(frozen=True)
class AbsorptionProfile:
    """Raw per-walk absorption data; classification happens after.

    Re-classifying the same profile against different targets uses the
    same walks, so arc estimates of one order sum exactly to the outer
    estimate.
    """

    components: np.ndarray  # int32 per walk; 0 outer, i+1 hole i, -1 lost
    turns: np.ndarray  # absorption angle as a turn in [0, 1); NaN off-circle
    n_holes: int
    seed: int

    @property
    def n_walks(self) -> int:
        return int(self.components.size)

    @property
    def lost(self) -> int:
        return int(np.count_nonzero(self.components == _LOST))

    def hit_histogram(self) -> tuple:
        absorbed = self.components[self.components >= 0]
        return tuple(
            int(v) for v in np.bincount(absorbed, minlength=self.n_holes + 1)
        )

    def classify(self, target) -> MeasureEstimate:
        comp = self.components
        if isinstance(target, OuterCircle):
            mask = comp == 0
        elif isinstance(target, OuterArc):
            wanted = {(target.k0 + c) % target.n0 for c in target.copies}
            on_circle = comp == 0
            bins = _arc_bins(self.turns[on_circle], target.n0)
            sel = np.isin(bins, sorted(wanted))
            mask = np.zeros(comp.size, dtype=bool)
            mask[np.flatnonzero(on_circle)[sel]] = True
        elif isinstance(target, HoleBoundaries):
            for i in target.indices:
                if not 0 <= i < self.n_holes:
                    raise MeasureError(f"hole index {i} out of range")
            mask = np.isin(comp, [i + 1 for i in target.indices])
        else:
            raise MeasureError(f"unknown target {target!r}")
        hits = int(np.count_nonzero(mask))
        n = self.n_walks
        value = hits / n
        stderr = math.sqrt(value * (1.0 - value) / n)
        return MeasureEstimate(
            value=value, stderr=stderr, n_walks=n,
            hits=self.hit_histogram(), target_hits=hits,
            lost=self.lost, seed=self.seed,
        )


def _arc_bins(turns: np.ndarray, n0: int) -> np.ndarray:
    """Half-open bin index floor(t * n0) with exact-rational tie handling.

    The float product can cross a bin boundary the exact product does
    not; walks within float slop of a boundary are re-decided with
    Fraction arithmetic (floats are exact binary rationals).
    """
    scaled = turns * n0
    bins = np.floor(scaled).astype(np.int64)
    np.clip(bins, 0, n0 - 1, out=bins)
    suspect = np.flatnonzero(np.abs(scaled - np.rint(scaled)) < 1e-9)
    for i in suspect:
        exact = Fraction(float(turns[i])) * n0
        bins[i] = min(int(math.floor(exact)), n0 - 1)
    return bins


# --- the walker ---


def _walk_chunk(rho, centers, radii, start, count, seed_seq, cfg):
    rng = np.random.default_rng(seed_seq)
    z = np.full(count, complex(start), dtype=np.complex128)
    idx = np.arange(count)
    comp = np.full(count, _LOST, dtype=np.int32)
    turn = np.full(count, np.nan)
    has_holes = centers.size > 0
    for _ in range(cfg.max_steps):
        if idx.size == 0:
            break
        d_outer = rho - np.abs(z)
        if has_holes:
            d_holes = np.abs(z[:, None] - centers[None, :]) - radii[None, :]
            d = np.minimum(d_outer, d_holes.min(axis=1))
        else:
            d = d_outer
        hit = d < cfg.eps_boundary
        if hit.any():
            zh = z[hit]
            if has_holes:
                dh = np.abs(zh[:, None] - centers[None, :]) - radii[None, :]
                stacked = np.column_stack([rho - np.abs(zh), dh])
                c = stacked.argmin(axis=1).astype(np.int32)
            else:
                c = np.zeros(zh.size, dtype=np.int32)
            comp[idx[hit]] = c
            t = (np.angle(zh) / _TWO_PI) % 1.0
            turn[idx[hit]] = np.where(c == 0, t, np.nan)
            keep = ~hit
            z, idx, d = z[keep], idx[keep], d[keep]
            if idx.size == 0:
                break
        theta = rng.random(idx.size) * _TWO_PI
        z = z + d * np.exp(1j * theta)
    return comp, turn


def simulate(domain: PerforatedDisc, start: complex,
             cfg: WalkConfig) -> AbsorptionProfile:
    """Run all walks and record where each one absorbed."""
    start = complex(start)
    if not domain.contains(start):
        raise MeasureError(f"start {start} outside the domain")
    clearance = domain.rho - abs(start)
    for h in domain.holes:
        clearance = min(clearance, abs(start - h.center) - h.radius)
    if clearance <= cfg.eps_boundary:
        raise MeasureError(
            f"start {start} within eps_boundary of a boundary component"
        )
    if domain.holes:
        min_hole = min(h.radius for h in domain.holes)
        if not cfg.eps_boundary < min_hole / 10.0:
            raise MeasureError(
                f"eps_boundary {cfg.eps_boundary} not below min hole "
                f"radius/10 = {min_hole / 10.0}"
            )

    centers = np.array([h.center for h in domain.holes], dtype=np.complex128)
    radii = np.array([h.radius for h in domain.holes], dtype=np.float64)
    sizes = []
    remaining = cfg.n_walks
    while remaining > 0:
        sizes.append(min(cfg.chunk_size, remaining))
        remaining -= sizes[-1]

    def run(chunk_index):
        seq = np.random.SeedSequence(entropy=cfg.rng_seed,
                                     spawn_key=(chunk_index,))
        return _walk_chunk(domain.rho, centers, radii, start,
                           sizes[chunk_index], seq, cfg)

    if cfg.threads == 1 or len(sizes) == 1:
        parts = [run(i) for i in range(len(sizes))]
    else:
        with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
            parts = list(pool.map(run, range(len(sizes))))

    comp = np.concatenate([p[0] for p in parts]) if parts else \
        np.zeros(0, np.int32)
    turn = np.concatenate([p[1] for p in parts]) if parts else np.zeros(0)
    return AbsorptionProfile(components=comp, turns=turn,
                             n_holes=len(domain.holes), seed=cfg.rng_seed)


def estimate(domain: PerforatedDisc, start: complex, target,
             cfg: WalkConfig) -> MeasureEstimate:
    """Harmonic measure of the target from start, with binomial stderr."""
    profile = simulate(domain, start, cfg)
    out = profile.classify(target)
    if out.lost > LOST_LIMIT * cfg.n_walks:
        raise MeasureError(
            f"{out.lost} of {cfg.n_walks} walks exceeded max_steps; "
            f"estimate invalid"
        )
    return out


# --- closed-form oracle ---


def exact_annulus(z_mod: float, r_in: float, r_out: float) -> float:
    """Measure of the outer circle from |z| in the annulus r_in < |z| < r_out."""
    if not 0 < r_in < z_mod < r_out:
        raise MeasureError(
            f"need r_in < z_mod < r_out, got {r_in}, {z_mod}, {r_out}"
        )
    return math.log(z_mod / r_in) / math.log(r_out / r_in)


# --- certification arenas ---


def build_arena(schedule: RadiiSchedule, n: int, rotated: bool,
                hole_floor: float = HOLE_FLOOR):
    """Perforated-disc arena for the first n scheduled poles.

    rotated=True takes the full merged orbit of half-radius discs;
    rotated=False takes the poles' own half-radius discs only.  Holes
    fully outside the arena are dropped (they do not meet it), holes
    straddling the circle are an error, and kept holes below hole_floor
    are enlarged to it.  Returns (domain, holes_meta) where holes_meta
    records per kept hole the center, the true dyadic exponent, the
    simulated radius, and whether it was enlarged.
    """
    if n < 0 or n > len(schedule.poles):
        raise MeasureError(
            f"stage {n} outside the schedule (0..{len(schedule.poles)})"
        )
    if not hole_floor > 0:
        raise MeasureError("hole_floor must be positive")
    rho = schedule.arena_rho
    if rotated:
        family = schedule.orbit_holes(shrink=1, count=n)
    else:
        family = [
            (schedule.poles[i], schedule.exponents[i] + 1) for i in range(n)
        ]
    holes = []
    meta = []
    for center, exponent in family:
        true_radius = dyadic(exponent)
        if abs(center) - true_radius > rho:
            continue  # entirely outside the arena
        if abs(center) + true_radius >= rho:
            raise MeasureError(
                f"hole at {center} straddles the arena circle |z|={rho}"
            )
        radius = max(true_radius, hole_floor)
        enlarged = radius > true_radius
        if abs(center) + radius >= rho or abs(center) <= radius:
            raise MeasureError(
                f"hole floor {hole_floor} too large for the hole at {center}"
            )
        holes.append(Hole(center, radius))
        meta.append({
            "center": center,
            "exponent": exponent,
            "radius": radius,
            "enlarged": enlarged,
        })
    try:
        domain = PerforatedDisc(rho, tuple(holes), require_origin_clear=True)
    except GeometryError as exc:
        raise MeasureError(f"arena construction failed: {exc}")
    return domain, meta


def _measure_payload(est: MeasureEstimate, meta, cfg: WalkConfig) -> dict:
    return {
        "stderr": est.stderr,
        "n_walks": est.n_walks,
        "hits": list(est.hits),
        "target_hits": est.target_hits,
        "lost": est.lost,
        "seed": est.seed,
        "eps_boundary": cfg.eps_boundary,
        "holes": [dict(m) for m in meta],
        "enlargement": (
            "holes below the floor were enlarged before walking; "
            "enlarging a hole only decreases the estimated measure, so "
            "the certified lower bound transfers to the true domain"
        ),
    }


def _check_precondition(thinness: Optional[ThinnessCertificate]) -> None:
    if thinness is not None and not thinness.valid:
        raise MeasureError(
            "thinness certificate invalid; measure bounds not meaningful"
        )


def verify_outer_bound(schedule: RadiiSchedule, n: int, cfg: WalkConfig,
                       thinness: Optional[ThinnessCertificate] = None,
                       hole_floor: float = HOLE_FLOOR) -> Certificate:
    """Certify measure of the outer circle >= 1/2 with the orbit holes cut.

    The caller owes a valid thinness certificate for the schedule; pass
    it to have the dependency enforced.
    """
    _check_precondition(thinness)
    domain, meta = build_arena(schedule, n, rotated=True,
                               hole_floor=hole_floor)
    est = estimate(domain, 0j, OuterCircle(), cfg)
    bound = 0.5 - est.three_sigma()
    lost_ok = est.lost <= LOST_LIMIT * cfg.n_walks
    valid = est.value >= bound and lost_ok
    payload = _measure_payload(est, meta, cfg)
    if not lost_ok:
        payload["lost_over_limit"] = True
    return Certificate(
        kind="outer_measure_lower_bound",
        valid=valid,
        bound=bound,
        value=est.value,
        margin=est.value - bound,
        method="walk-on-spheres outer-circle estimate on the orbit-hole "
               "arena; threshold 1/2 less three binomial sigma",
        inputs={"stage": n, "rho": schedule.arena_rho, "n0": schedule.n0,
                "n_holes": len(domain.holes), "seed": cfg.rng_seed},
        payload=payload,
    )


def verify_arc_bound(schedule: RadiiSchedule, arc: Arc, n: int,
                     cfg: WalkConfig,
                     thinness: Optional[ThinnessCertificate] = None,
                     hole_floor: float = HOLE_FLOOR) -> Certificate:
    """Certify measure of the arc >= 1/(2 n0) with unrotated holes cut.

    Two structural cross-checks ride along: the same arc on the smaller
    orbit-hole domain measures no more than on the unrotated domain
    (domain monotonicity), and the n0 rotated arcs on the orbit-hole
    domain agree pairwise within three joint sigma (symmetry).
    """
    _check_precondition(thinness)
    if arc.n0 != schedule.n0:
        raise MeasureError(
            f"arc order {arc.n0} does not match schedule order {schedule.n0}"
        )
    n0 = arc.n0
    domain, meta = build_arena(schedule, n, rotated=False,
                               hole_floor=hole_floor)
    est = estimate(domain, 0j, OuterArc(arc.k0, n0), cfg)
    bound = 1.0 / (2.0 * n0) - est.three_sigma()
    lost_ok = est.lost <= LOST_LIMIT * cfg.n_walks

    # one orbit-domain profile serves the monotonicity and symmetry checks
    orbit_domain, orbit_meta = build_arena(schedule, n, rotated=True,
                                           hole_floor=hole_floor)
    orbit_profile = simulate(orbit_domain, 0j, cfg)
    arc_values = []
    arc_errors = []
    for k in range(n0):
        rotated_est = orbit_profile.classify(
            OuterArc((arc.k0 + k) % n0, n0)
        )
        arc_values.append(rotated_est.value)
        arc_errors.append(rotated_est.stderr)
    mono_est = arc_values[0]
    mono_ok = mono_est <= est.value + 3.0 * math.hypot(
        arc_errors[0], est.stderr
    )
    symmetry_ok = True
    worst_pair = 0.0
    for i in range(n0):
        for j in range(i + 1, n0):
            gap = abs(arc_values[i] - arc_values[j])
            joint = 3.0 * math.hypot(arc_errors[i], arc_errors[j])
            worst_pair = max(worst_pair, gap - joint)
            if gap > joint:
                symmetry_ok = False

    valid = est.value >= bound and lost_ok and mono_ok and symmetry_ok
    payload = _measure_payload(est, meta, cfg)
    payload.update({
        "arc": {"k0": arc.k0, "n0": n0},
        "orbit_arc_values": arc_values,
        "orbit_arc_stderrs": arc_errors,
        "monotonicity_ok": mono_ok,
        "symmetry_ok": symmetry_ok,
        "symmetry_worst_excess": worst_pair,
        "orbit_holes": [dict(m) for m in orbit_meta],
    })
    if not lost_ok:
        payload["lost_over_limit"] = True
    return Certificate(
        kind="arc_measure_lower_bound",
        valid=valid,
        bound=bound,
        value=est.value,
        margin=est.value - bound,
        method="walk-on-spheres arc estimate on the unrotated-hole arena; "
               "threshold 1/(2 n0) less three binomial sigma, plus domain "
               "monotonicity and rotated-arc symmetry cross-checks",
        inputs={"stage": n, "rho": schedule.arena_rho, "n0": n0,
                "k0": arc.k0, "n_holes": len(domain.holes),
                "seed": cfg.rng_seed},
        payload=payload,
    )

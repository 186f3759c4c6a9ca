"""Weighted log potentials and the disc-radius schedule.

The thin set certified here is a union of tiny closed discs around the
rotation orbit of the poles.  An explicit subharmonic potential

    u(z) = offset + sum_c lam_c * log(|z - c| / M)

is pinned to u(0) = -1/2, and the schedule assigns each pole the largest
dyadic radius 2^-m whose rotated disc copies all satisfy u <= -1.  The
required radii shrink like exp(-1/lam_c), far below float64 range for
realistic center counts, so radii live as integer dyadic exponents and
every bound is evaluated in log space; float radii are a lossy view.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

from .geometry import COINCIDENCE_TOL, GeometryError, rotate

__all__ = [
    "ThinnessError",
    "LogPotential",
    "RadiiSchedule",
    "ThinnessCertificate",
    "build_potential",
    "choose_disc_radii",
    "verify_thinness",
    "dyadic",
]

THIN_LEVEL = -1.0  # required sup of u on every scheduled disc
ORIGIN_PIN = -0.5  # required u(0)
ORIGIN_PIN_TOL = 1e-9

# the analytic disc bound must clear THIN_LEVEL by this much, so float
# noise in re-verification can never flip a certified disc
THIN_MARGIN = 1e-9

# give up below 2^-FLOOR_EXPONENT; radii that small mean the weights are
# degenerate, not that the search needs to continue
FLOOR_EXPONENT = 4096

_LN2 = math.log(2.0)


class ThinnessError(ValueError):
    """Raised when a potential or schedule cannot be built as requested."""


def dyadic(exponent: int) -> float:
    """Float view of 2^-exponent; 0.0 once past float64 range."""
    if exponent > 1074:
        return 0.0
    return math.ldexp(1.0, -exponent)


# ---------------------------------------------------------------------------
# Potentials


@dataclass(frozen=True)
class LogPotential:
    """Finite weighted sum of log(|z - c| / M) terms plus an offset.

    scale M is chosen so every term is nonpositive on the working region
    (|z - c| <= M there); partial sums therefore upper-bound the whole
    potential, which is what makes the disc bounds finitely checkable.
    weight_tail_bound records sum of the weights a continuation of the
    center family would add (0 for the closed finite family).
    """

    centers: tuple
    weights: tuple
    scale: float
    offset: float = 0.0
    weight_tail_bound: float = 0.0

    def value(self, z: complex) -> float:
        total = self.offset
        for c, lam in zip(self.centers, self.weights):
            d = abs(z - c)
            if d == 0.0:
                return -math.inf
            total += lam * math.log(d / self.scale)
        return total

    def origin_value(self) -> float:
        return self.value(0j)

    def center_index(self, c: complex, tol: float = COINCIDENCE_TOL) -> int:
        for i, ci in enumerate(self.centers):
            if abs(ci - c) <= tol:
                return i
        raise ThinnessError(f"no potential center at {c}")


def build_potential(poles: Sequence, working_radius: float,
                    origin_value: float = ORIGIN_PIN,
                    weight_mode: str = "geometric") -> LogPotential:
    """Potential with singularities at the given centers, pinned at 0.

    Weight modes, before normalization:
      geometric: w_n = 2^-n / max(1, t_n)   (summable over an infinite
                 continuation of the family)
      uniform:   w_n = 1 / max(1, t_n)      (keeps per-center weights of
                 large families off the floor)
    with t_n = log(M / |a_n|) > 0.  The common factor lam is solved from
    u(0) = origin_value, offset stays 0, so the pin is exact by
    construction up to float rounding.
    """
    pts = [complex(p) for p in poles]
    if not pts:
        raise ThinnessError("empty center list; nothing to build")
    for p in pts:
        if not (math.isfinite(p.real) and math.isfinite(p.imag)):
            raise ThinnessError(f"nonfinite center {p}")
        if abs(p) <= COINCIDENCE_TOL:
            raise ThinnessError("potential center at the origin")
    if not origin_value < 0:
        raise ThinnessError(f"origin value must be negative, got {origin_value}")
    if weight_mode not in ("geometric", "uniform"):
        raise ThinnessError(f"unknown weight mode {weight_mode!r}")
    if not working_radius > 0:
        raise ThinnessError("working radius must be positive")

    sup_mod = max(abs(p) for p in pts)
    scale = 2.0 * sup_mod + 2.0 * working_radius
    t = [math.log(scale / abs(p)) for p in pts]
    if weight_mode == "geometric":
        raw = [0.5 ** (n + 1) / max(1.0, tn) for n, tn in enumerate(t)]
    else:
        raw = [1.0 / max(1.0, tn) for tn in t]
    # u(0) = -lam * sum(raw_n * t_n)
    s = sum(rn * tn for rn, tn in zip(raw, t))
    lam = -origin_value / s
    weights = tuple(lam * rn for rn in raw)
    tail = lam * 0.5 ** len(pts) if weight_mode == "geometric" else 0.0
    return LogPotential(centers=tuple(pts), weights=weights, scale=scale,
                        offset=0.0, weight_tail_bound=tail)


# ---------------------------------------------------------------------------
# Radii schedule


@dataclass(frozen=True)
class RadiiSchedule:
    """Per-pole dyadic radius exponents plus the arena they were checked in.

    radius n is 2^-exponents[n]; the float view underflows to 0.0 for
    exponents past float64 range, so all certification math stays on the
    exponents.  verified flags are set by the builder and re-derived by
    verify_thinness.
    """

    poles: tuple
    exponents: tuple
    n0: int
    arena_rho: float
    verified: tuple

    def radii(self) -> tuple:
        return tuple(dyadic(m) for m in self.exponents)

    def orbit_holes(self, shrink: int = 0, count: Optional[int] = None):
        """Merged rotated-disc family [(center, exponent)].

        Coincident copies merge to the larger disc (smaller exponent);
        shrink adds to every exponent (shrink=1 halves the radii, the
        form the measure arenas use).  count limits to the first poles.
        """
        n = len(self.poles) if count is None else count
        fam: list = []
        for i in range(n):
            for k in range(self.n0):
                c = rotate(self.poles[i], k, self.n0)
                m = self.exponents[i] + shrink
                for fi, (fc, fm) in enumerate(fam):
                    if abs(fc - c) <= COINCIDENCE_TOL:
                        fam[fi] = (fc, min(fm, m))
                        break
                else:
                    fam.append((c, m))
        return fam


def _disc_sup_bound(potential: LogPotential, center_idx: int,
                    exponent: int) -> float:
    """Upper bound of the potential over D(center, 2^-exponent).

    Singular term at its boundary max, every other term at its max
    distance d + radius (capped at M so the term stays <= 0).
    """
    m = potential.scale
    c0 = potential.centers[center_idx]
    rho = dyadic(exponent)
    total = potential.offset
    total += potential.weights[center_idx] * (-exponent * _LN2 - math.log(m))
    for i, (c, lam) in enumerate(zip(potential.centers, potential.weights)):
        if i == center_idx:
            continue
        reach = min(m, abs(c - c0) + rho)
        total += lam * math.log(reach / m)
    return total


def _min_exponent_for_copy(potential: LogPotential, center_idx: int,
                           rho_bar_exp: int, floor_exponent: int) -> int:
    """Smallest exponent whose disc bound clears THIN_LEVEL - THIN_MARGIN."""
    lam = potential.weights[center_idx]
    target = THIN_LEVEL - THIN_MARGIN
    # conservative seed: remainder frozen at the cap radius
    c0 = potential.centers[center_idx]
    rem = potential.offset
    for i, (c, lam_i) in enumerate(zip(potential.centers, potential.weights)):
        if i == center_idx:
            continue
        reach = min(potential.scale, abs(c - c0) + dyadic(rho_bar_exp))
        rem += lam_i * math.log(reach / potential.scale)
    need = ((-target + rem) / lam - math.log(potential.scale)) / _LN2
    exponent = max(rho_bar_exp, int(math.ceil(need)))
    # the seed used the capped remainder; tighten, then re-confirm
    while exponent > rho_bar_exp and \
            _disc_sup_bound(potential, center_idx, exponent - 1) <= target:
        exponent -= 1
    while _disc_sup_bound(potential, center_idx, exponent) > target:
        exponent += 1
        if exponent > floor_exponent:
            bound = _disc_sup_bound(potential, center_idx, floor_exponent)
            raise ThinnessError(
                f"no dyadic radius above 2^-{floor_exponent} brings the disc "
                f"bound at center {c0} under {THIN_LEVEL} (margin "
                f"{bound - THIN_LEVEL:+.3e} at the floor)"
            )
    return exponent


def _separation_ok(d: float, exp_a: int, exp_b: int) -> bool:
    """Closed discs of radii 2^-exp_a, 2^-exp_b at center distance d are
    disjoint.  Radii sum bounded by 2^(1 - min exponent)."""
    lead = min(exp_a, exp_b)
    if lead > 1076:
        return d > 0.0
    return d > math.ldexp(1.0, 1 - lead)


def choose_disc_radii(potential: LogPotential, poles: Sequence, n0: int,
                      rho: float, count: Optional[int] = None,
                      floor_exponent: int = FLOOR_EXPONENT) -> RadiiSchedule:
    """Largest dyadic radii with u <= -1 on every rotated disc copy.

    Each of the n0 copies of D(a_n, 2^-m_n) must carry its own potential
    center (the potential is expected to be built over the orbit), and
    the copies must stay clear of each other, of everything previously
    placed, of the circle |z| = rho, and of the origin.  All clearance
    constraints loosen as radii shrink, so the exponent only ever moves
    up from the analytic minimum.
    """
    pts = [complex(p) for p in poles]
    if count is None:
        count = len(pts)
    if count > len(pts):
        raise ThinnessError(f"requested {count} radii for {len(pts)} poles")
    if n0 < 1:
        raise ThinnessError(f"symmetry order must be positive, got {n0}")
    if not rho > 0:
        raise ThinnessError("arena radius must be positive")
    for p in pts[:count]:
        near_circle = abs(abs(p) - rho) <= COINCIDENCE_TOL
        if near_circle or any(
            abs(abs(rotate(p, k, n0)) - rho) <= COINCIDENCE_TOL
            for k in range(n0)
        ):
            raise ThinnessError(f"pole orbit of {p} touches the circle |z|={rho}")

    placed: list = []  # merged (center, exponent) family
    exponents: list = []
    for n in range(count):
        p = pts[n]
        # cap: radius < 1, radius <= |a_n|/2, and strictly inside reach M
        cap = max(1, int(math.ceil(1.0 - math.log2(abs(p)))))
        exponent = cap
        for k in range(n0):
            c = rotate(p, k, n0)
            idx = potential.center_index(c)
            exponent = max(
                exponent,
                _min_exponent_for_copy(potential, idx, cap, floor_exponent),
            )
        # clearance: same-orbit copies, placed family, circle, origin
        copies = [rotate(p, k, n0) for k in range(n0)]
        for _ in range(floor_exponent):
            ok = True
            for i, a in enumerate(copies):
                for b in copies[i + 1:]:
                    d = abs(a - b)
                    if d <= COINCIDENCE_TOL:
                        continue  # exact orbit coincidence, same disc
                    if not _separation_ok(d, exponent, exponent):
                        ok = False
                if abs(a) <= dyadic(exponent) or \
                        abs(abs(a) - rho) <= dyadic(exponent):
                    ok = False
                for fc, fm in placed:
                    d = abs(a - fc)
                    if d <= COINCIDENCE_TOL:
                        continue  # merges with the placed disc
                    if not _separation_ok(d, exponent, fm):
                        ok = False
            if ok:
                break
            exponent += 1
        else:
            raise ThinnessError(
                f"clearance for pole {p} not reachable above the floor"
            )
        exponents.append(exponent)
        for k in range(n0):
            c = rotate(p, k, n0)
            for fi, (fc, fm) in enumerate(placed):
                if abs(fc - c) <= COINCIDENCE_TOL:
                    placed[fi] = (fc, min(fm, exponent))
                    break
            else:
                placed.append((c, exponent))

    return RadiiSchedule(
        poles=tuple(pts[:count]),
        exponents=tuple(exponents),
        n0=n0,
        arena_rho=float(rho),
        verified=tuple(True for _ in range(count)),
    )


# ---------------------------------------------------------------------------
# Certification


@dataclass(frozen=True)
class ThinnessCertificate:
    """Machine-checkable record that the scheduled discs are a thin set.

    disc_bounds holds (pole index, copy index, sup bound) per rotated
    disc; failures holds (pole index, copy index, reason) for everything
    that broke.  A certificate never repairs: invalid output carries the
    offending indices.
    """

    potential: LogPotential
    schedule: RadiiSchedule
    origin_value: float
    disc_bounds: tuple
    failures: tuple
    valid: bool
    notes: str

    def margin(self) -> float:
        """Worst clearance of the -1 level over all discs (>= 0 if valid)."""
        if not self.disc_bounds:
            return math.inf
        return min(THIN_LEVEL - b for _, _, b in self.disc_bounds)

    def to_dict(self) -> dict:
        """Serializable record; the potential rides along for replay."""
        margin = self.margin()
        return {
            "kind": "thinness",
            "valid": self.valid,
            "origin_value": self.origin_value,
            "margin": margin if math.isfinite(margin) else None,
            "schedule": {
                "poles": list(self.schedule.poles),
                "exponents": list(self.schedule.exponents),
                "n0": self.schedule.n0,
                "arena_rho": self.schedule.arena_rho,
                "verified": list(self.schedule.verified),
            },
            "potential": {
                "centers": list(self.potential.centers),
                "weights": list(self.potential.weights),
                "scale": self.potential.scale,
                "offset": self.potential.offset,
                "weight_tail_bound": self.potential.weight_tail_bound,
            },
            "disc_bounds": [list(row) for row in self.disc_bounds],
            "failures": [list(row) for row in self.failures],
            "notes": self.notes,
        }


def verify_thinness(potential: LogPotential,
                    schedule: RadiiSchedule) -> ThinnessCertificate:
    """Re-derive every disc bound and clearance from scratch."""
    failures: list = []
    bounds: list = []

    u0 = potential.origin_value()
    if abs(u0 - ORIGIN_PIN) > ORIGIN_PIN_TOL:
        failures.append((-1, -1, f"origin pin broken: u(0) = {u0!r}"))

    placed: list = []
    for n, p in enumerate(schedule.poles):
        exponent = schedule.exponents[n]
        if exponent < 1:
            failures.append((n, -1, f"radius 2^-{exponent} not below 1"))
        # 2^-m <= |a_n|/2  <=>  m >= 1 - log2|a_n|
        if exponent < 1.0 - math.log2(abs(p)):
            failures.append((n, -1, "radius exceeds half the pole modulus"))
        copies = [rotate(p, k, schedule.n0) for k in range(schedule.n0)]
        for k, c in enumerate(copies):
            try:
                idx = potential.center_index(c)
            except ThinnessError:
                failures.append((n, k, "no potential center at this copy"))
                continue
            bound = _disc_sup_bound(potential, idx, exponent)
            bounds.append((n, k, bound))
            if bound > THIN_LEVEL:
                failures.append((n, k, f"disc bound {bound:.6f} above {THIN_LEVEL}"))
        for i, a in enumerate(copies):
            for b in copies[i + 1:]:
                d = abs(a - b)
                if d > COINCIDENCE_TOL and not _separation_ok(d, exponent, exponent):
                    failures.append((n, i, "orbit copies overlap"))
            if abs(a) <= dyadic(exponent):
                failures.append((n, i, "disc reaches the origin"))
            if abs(abs(a) - schedule.arena_rho) <= dyadic(exponent):
                failures.append((n, i, "disc reaches the arena circle"))
            for fc, fm in placed:
                d = abs(a - fc)
                if d > COINCIDENCE_TOL and not _separation_ok(d, exponent, fm):
                    failures.append((n, i, "overlaps an earlier disc"))
        for c in copies:
            for fi, (fc, fm) in enumerate(placed):
                if abs(fc - c) <= COINCIDENCE_TOL:
                    placed[fi] = (fc, min(fm, exponent))
                    break
            else:
                placed.append((c, exponent))

    notes = (
        "per-disc sup split: singular term at the boundary radius, each "
        "remaining term at its max distance capped at the scale; all "
        "radius arithmetic on dyadic exponents"
    )
    return ThinnessCertificate(
        potential=potential,
        schedule=schedule,
        origin_value=u0,
        disc_bounds=tuple(bounds),
        failures=tuple(failures),
        valid=not failures,
        notes=notes,
    )

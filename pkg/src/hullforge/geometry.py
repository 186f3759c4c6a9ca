"""Planar geometry for the counterexample pipeline.

Points are plain ``complex`` numbers.  The pipeline works in a translated
frame in which the distinguished boundary point sits at the origin, so
rotations are always about 0.  Everything that must be exact (ring moduli,
arc endpoints) carries an exact rational representation next to its float
view; everything else is float64.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence, Union

__all__ = [
    "GeometryError",
    "Plane",
    "Disc",
    "Polygon",
    "Arc",
    "Hole",
    "PerforatedDisc",
    "RingPole",
    "Lemma1Data",
    "rotate",
    "theorem2_poles",
    "theorem2_positions",
    "lemma1_poles",
    "select_rho_and_arc",
    "orbit_centers",
    "point_segment_distance",
]

# Two float points are "the same" below this separation; used for pole
# dedup and orbit-coincidence detection, far above accumulated roundoff.
COINCIDENCE_TOL = 1e-12

# Samples per circular arc / polygon edge when a containment check has no
# closed form.
_ARC_SAMPLES = 512

_MAX_RING = 30  # 2**31 pole indices overflow the layout beyond this


class GeometryError(ValueError):
    """Raised when a geometric construction step cannot be satisfied."""


def rotate(z: complex, k: int, n: int) -> complex:
    """Rotate z about the origin by the k-th n-th root of unity.

    Quarter-turn and half-turn cases are exact (unit factors 1, i, -1, -i)
    so that orbit coincidences under n = 4 can be detected exactly.
    """
    if n <= 0:
        raise GeometryError(f"rotation order must be positive, got {n}")
    k = k % n
    if k == 0:
        return z
    if n == 2:
        return -z
    if n == 4:
        return z * (1j ** k)
    if n % 4 == 0 and (4 * k) % n == 0:
        return z * (1j ** (4 * k // n))
    return z * cmath.exp(2j * math.pi * k / n)


# ---------------------------------------------------------------------------
# Domains


@dataclass(frozen=True)
class Plane:
    """The whole complex plane."""

    def contains(self, z: complex, margin: float = 0.0) -> bool:
        return True


@dataclass(frozen=True)
class Disc:
    """Open disc D(center, radius)."""

    center: complex = 0j
    radius: float = 1.0

    def __post_init__(self) -> None:
        if not self.radius > 0:
            raise GeometryError(f"disc radius must be positive, got {self.radius}")

    def contains(self, z: complex, margin: float = 0.0) -> bool:
        return abs(z - self.center) < self.radius - margin

    def boundary_nearest(self, z: complex) -> complex:
        """Nearest boundary point; the center's full-circle tie resolves to angle 0."""
        w = z - self.center
        if abs(w) <= COINCIDENCE_TOL:
            return self.center + self.radius
        return self.center + self.radius * w / abs(w)

    def diameter(self) -> float:
        return 2.0 * self.radius


@dataclass(frozen=True)
class Polygon:
    """Simple polygon given by its vertex loop (implicitly closed)."""

    vertices: tuple

    def __post_init__(self) -> None:
        if len(self.vertices) < 3:
            raise GeometryError("polygon needs at least 3 vertices")

    def _edges(self):
        v = self.vertices
        return [(v[i], v[(i + 1) % len(v)]) for i in range(len(v))]

    def contains(self, z: complex, margin: float = 0.0) -> bool:
        # even-odd ray crossing; margin > 0 additionally requires boundary distance
        if margin > 0.0 and self._boundary_distance(z) <= margin:
            return False
        crossings = 0
        x, y = z.real, z.imag
        for a, b in self._edges():
            ay, by = a.imag, b.imag
            if (ay > y) != (by > y):
                t = (y - ay) / (by - ay)
                if x < a.real + t * (b.real - a.real):
                    crossings += 1
        return crossings % 2 == 1

    def _boundary_distance(self, z: complex) -> float:
        return min(point_segment_distance(z, a, b) for a, b in self._edges())

    def boundary_nearest(self, z: complex) -> complex:
        """Nearest boundary point, ties by smallest argument then modulus."""
        best: list = []
        best_d = math.inf
        for a, b in self._edges():
            p = _segment_nearest_point(z, a, b)
            d = abs(z - p)
            if d < best_d - COINCIDENCE_TOL:
                best, best_d = [p], d
            elif abs(d - best_d) <= COINCIDENCE_TOL:
                best.append(p)
        return min(best, key=lambda p: (cmath.phase(p) % (2 * math.pi), abs(p)))

    def diameter(self) -> float:
        v = self.vertices
        return max(abs(p - q) for p in v for q in v)


Domain = Union[Plane, Disc, Polygon]


def _segment_nearest_point(z: complex, a: complex, b: complex) -> complex:
    u = b - a
    denom = (u.real * u.real + u.imag * u.imag)
    if denom == 0.0:
        return a
    t = ((z - a).real * u.real + (z - a).imag * u.imag) / denom
    t = min(1.0, max(0.0, t))
    return a + t * u


def point_segment_distance(z: complex, a: complex, b: complex) -> float:
    """Euclidean distance from z to the closed segment [a, b]."""
    return abs(z - _segment_nearest_point(z, a, b))


# ---------------------------------------------------------------------------
# Arcs and perforated discs


@dataclass(frozen=True)
class Arc:
    """Closed arc {rho e^{i theta} : 2 pi k0/n0 <= theta <= 2 pi (k0+1)/n0}.

    Endpoints are exact rationals of a full turn; they are never stored as
    float angles.  Membership classification bins by the half-open interval
    [k0/n0, (k0+1)/n0) so the n0 arcs of one order partition hits exactly
    (the closed-arc semantics differ on a measure-zero set).
    """

    k0: int
    n0: int

    def __post_init__(self) -> None:
        if self.n0 <= 0:
            raise GeometryError(f"arc order must be positive, got {self.n0}")
        if not 0 <= self.k0 < self.n0:
            raise GeometryError(f"arc index {self.k0} outside [0, {self.n0})")

    def angle_fractions(self) -> tuple:
        """Exact endpoints as fractions of a full turn."""
        return Fraction(self.k0, self.n0), Fraction(self.k0 + 1, self.n0)

    def contains_turn(self, turn: float) -> bool:
        """Half-open membership of a turn fraction in [0, 1)."""
        lo, hi = self.angle_fractions()
        return lo <= turn < hi

    def rotated(self, k: int) -> "Arc":
        return Arc((self.k0 + k) % self.n0, self.n0)

    def point(self, rho: float, t: float) -> complex:
        """Point at parameter t in [0, 1] along the arc on radius rho."""
        theta = 2 * math.pi * (self.k0 + t) / self.n0
        return rho * cmath.exp(1j * theta)


@dataclass(frozen=True)
class Hole:
    center: complex
    radius: float


@dataclass(frozen=True)
class PerforatedDisc:
    """Disc of radius rho about 0 minus closed sub-discs (the holes).

    Holes must sit strictly inside the disc with pairwise disjoint closures;
    a finite family of disjoint closed discs never disconnects the domain.
    Origin-clearance (no hole closure containing 0) is a property of the
    certification arenas, not of the type: builders that start walks at 0
    pass require_origin_clear=True.
    """

    rho: float
    holes: tuple = ()
    arc: Optional[Arc] = None
    require_origin_clear: bool = field(default=False, compare=False)

    def __post_init__(self) -> None:
        if not self.rho > 0:
            raise GeometryError(f"outer radius must be positive, got {self.rho}")
        for h in self.holes:
            if not h.radius > 0:
                raise GeometryError(f"hole radius must be positive, got {h.radius}")
            if abs(h.center) + h.radius >= self.rho:
                raise GeometryError(
                    f"hole at {h.center} radius {h.radius} not strictly inside "
                    f"disc of radius {self.rho}"
                )
        for i, a in enumerate(self.holes):
            for b in self.holes[i + 1:]:
                if abs(a.center - b.center) <= a.radius + b.radius:
                    raise GeometryError(
                        f"hole closures at {a.center} and {b.center} intersect"
                    )
        if self.require_origin_clear:
            for h in self.holes:
                if abs(h.center) <= h.radius:
                    raise GeometryError(f"hole at {h.center} contains the origin")

    def contains(self, z: complex) -> bool:
        if abs(z) >= self.rho:
            return False
        return all(abs(z - h.center) > h.radius for h in self.holes)


# ---------------------------------------------------------------------------
# Pole layouts


@dataclass(frozen=True)
class RingPole:
    """Pole a_{2^j+k} = r_j e^{2 pi i k / 2^j} of the dyadic ring layout.

    modulus and the angle pair (angle_num, angle_den) are exact; z is the
    float view.  Ring moduli r_j = 1 + 1/(j+1) decrease to 1, so every pole
    lies outside the closed unit disc.
    """

    index: int
    ring: int
    slot: int
    modulus: Fraction
    angle_num: int  # angle = 2 pi * angle_num / angle_den
    angle_den: int
    z: complex


def theorem2_poles(j_max: int) -> list:
    """Rings 0..j_max of the dyadic layout, in index order a_1, a_2, ...

    Ring j holds 2^j poles on |z| = 1 + 1/(j+1); the full list has
    2^{j_max+1} - 1 entries.
    """
    if j_max < 0:
        raise GeometryError(f"ring count must be nonnegative, got {j_max}")
    if j_max > _MAX_RING:
        raise GeometryError(f"ring index {j_max} exceeds supported maximum {_MAX_RING}")
    poles = []
    for j in range(j_max + 1):
        r = Fraction(j + 2, j + 1)
        rf = float(r)
        m = 1 << j
        for k in range(m):
            z = rf * cmath.exp(2j * math.pi * k / m) if k else complex(rf)
            # quarter-slot angles are exact where possible
            if m >= 4 and k % (m // 4) == 0:
                z = rf * (1j ** (4 * k // m))
            elif m == 2 and k == 1:
                z = complex(-rf)
            poles.append(
                RingPole(index=m + k, ring=j, slot=k, modulus=r,
                         angle_num=k, angle_den=m, z=z)
            )
    return poles


def theorem2_positions(j_max: int) -> list:
    """Float positions only, list position = index - 1."""
    return [p.z for p in theorem2_poles(j_max)]


# ---------------------------------------------------------------------------
# Nearest-boundary pole families (dense interior seeds)


@dataclass(frozen=True)
class Lemma1Data:
    """Interior seeds b_n, boundary poles a_n, and the segment separations.

    B_n is represented operationally by the segment [b_n, a_n): every point
    of that segment has a_n as its nearest boundary point, and the same
    segment is what the liminf check later samples, so the separation
    matrix eps[n][j] = dist(a_j, segment_n) is self-consistent with the
    bound it feeds.  Indices are 0-based here; caps follow the 1-based
    divisor (j+1)^2.
    """

    domain: Domain
    interior: tuple
    poles: tuple
    eps: tuple  # eps[n][j] = dist(a_j, B_n); diagonal 0.0
    caps: tuple  # R_j = min_{i<j} eps[i][j] / (j+1)^2, R_0 = diam
    segment_samples: int

    def segment(self, n: int) -> tuple:
        return (self.interior[n], self.poles[n])


def _rational_points(limit_denominator: int):
    """Diagonal enumeration of lowest-term rational-coordinate points.

    Order: denominator q ascending, then numerator pairs lexicographic.
    Every rational-coordinate point appears exactly once.
    """
    for q in range(1, limit_denominator + 1):
        for px in range(-q, q + 1):
            for py in range(-q, q + 1):
                if math.gcd(math.gcd(abs(px), abs(py)), q) != 1:
                    continue
                yield complex(Fraction(px, q) + 0.0, Fraction(py, q) + 0.0)


def lemma1_poles(domain: Domain, count: int, seeds=None,
                 segment_samples: int = 1 << 10,
                 max_denominator: int = 64) -> Lemma1Data:
    """Distinct nearest-boundary poles seeded by a dense interior enumeration.

    ``seeds`` defaults to the diagonal rational enumeration; any iterable of
    interior points may be passed instead.  Seeds whose nearest boundary
    point duplicates an earlier pole are dropped (the construction passes to
    a subsequence with distinct a_n); seeds outside the domain are skipped.
    """
    if isinstance(domain, Plane):
        raise GeometryError("nearest-boundary poles need a bounded domain")
    if count < 1:
        raise GeometryError(f"pole count must be positive, got {count}")
    if seeds is None:
        seeds = _rational_points(max_denominator)
    interior: list = []
    poles: list = []
    for b in seeds:
        if len(poles) == count:
            break
        if not domain.contains(b):
            continue
        a = domain.boundary_nearest(b)
        if any(abs(a - p) <= COINCIDENCE_TOL for p in poles):
            continue
        interior.append(b)
        poles.append(a)
    if len(poles) < count:
        raise GeometryError(
            f"only {len(poles)} distinct poles found in the seed "
            f"enumeration; extend the seeds (or raise max_denominator)"
        )

    n = count
    eps = [[0.0] * n for _ in range(n)]
    for i in range(n):
        for j in range(n):
            if i == j:
                continue
            eps[i][j] = point_segment_distance(poles[j], interior[i], poles[i])

    diam = domain.diameter()
    caps = []
    for j in range(n):
        if j == 0:
            caps.append(diam)  # empty minimum: neutral cap, divisor 1
        else:
            caps.append(min(eps[i][j] for i in range(j)) / (j + 1) ** 2)

    return Lemma1Data(
        domain=domain,
        interior=tuple(interior),
        poles=tuple(poles),
        eps=tuple(tuple(row) for row in eps),
        caps=tuple(caps),
        segment_samples=segment_samples,
    )


# ---------------------------------------------------------------------------
# Working-radius and arc selection


def _arc_inside_disc(rho: float, arc: Arc, d: Disc) -> bool:
    """Exact containment of the closed arc in an open disc.

    |rho e^{i theta} - c| over the arc attains its max at an endpoint or at
    the antipodal direction of c, whichever lies in the arc.
    """
    lo, hi = arc.angle_fractions()
    cands = [2 * math.pi * float(lo), 2 * math.pi * float(hi)]
    if abs(d.center) > 0:
        anti = (cmath.phase(-d.center) % (2 * math.pi)) / (2 * math.pi)
        for shift in (0.0, 1.0, -1.0):
            t = anti + shift
            if float(lo) <= t <= float(hi):
                cands.append(2 * math.pi * t)
    return all(abs(rho * cmath.exp(1j * th) - d.center) < d.radius for th in cands)


def _arc_inside(rho: float, arc: Arc, domain: Domain) -> bool:
    if isinstance(domain, Plane):
        return True
    if isinstance(domain, Disc):
        return _arc_inside_disc(rho, arc, domain)
    return all(
        domain.contains(arc.point(rho, i / _ARC_SAMPLES))
        for i in range(_ARC_SAMPLES + 1)
    )


def _circle_meets(rho: float, domain: Domain) -> bool:
    if isinstance(domain, Plane):
        return True
    if isinstance(domain, Disc):
        return abs(abs(domain.center) - rho) < domain.radius
    return any(
        domain.contains(rho * cmath.exp(2j * math.pi * i / _ARC_SAMPLES))
        for i in range(_ARC_SAMPLES)
    )


def _closed_disc_inside(rho: float, domain: Domain) -> bool:
    if isinstance(domain, Plane):
        return True
    if isinstance(domain, Disc):
        return abs(domain.center) + rho < domain.radius
    return all(
        domain.contains(rho * cmath.exp(2j * math.pi * i / _ARC_SAMPLES), margin=1e-12)
        for i in range(_ARC_SAMPLES)
    ) and domain.contains(0j)


@dataclass(frozen=True)
class RhoArcChoice:
    rho: float
    arc: Arc
    trials: tuple  # (rho, verdict string) per attempted radius


def default_trial_radii(depth: int = 16) -> list:
    """Decreasing dyadic trials 1/2, 1/4, ... (generic default)."""
    return [0.5 ** m for m in range(1, depth + 1)]


def select_rho_and_arc(d1: Domain, d2: Domain, forbidden: Sequence,
                       trial_radii: Sequence, n0: Optional[int] = None,
                       ) -> RhoArcChoice:
    """Pick a working radius rho and a rational-angle arc J.

    Constraints per trial radius, in order: the closed disc D-bar_rho lies
    in d2; the circle |z| = rho avoids every forbidden disc (center,
    radius); the circle meets d1; some closed arc of order n0 (or of the
    smallest feasible order when n0 is None) lies inside d1.  Failures are
    collected per trial and reported if no radius works.
    """
    trials = []
    orders = [n0] if n0 is not None else list(range(1, 65))
    for rho in trial_radii:
        if not rho > 0:
            trials.append((rho, "nonpositive radius"))
            continue
        if not _closed_disc_inside(rho, d2):
            trials.append((rho, "closed disc not inside outer domain"))
            continue
        bad = None
        for c, r in forbidden:
            if abs(abs(c) - rho) <= r:
                bad = (c, r)
                break
        if bad is not None:
            trials.append((rho, f"circle meets forbidden disc at {bad[0]}"))
            continue
        if not _circle_meets(rho, d1):
            trials.append((rho, "circle misses inner domain"))
            continue
        found = None
        for order in orders:
            for k0 in range(order):
                arc = Arc(k0, order)
                if _arc_inside(rho, arc, d1):
                    found = arc
                    break
            if found is not None:
                break
        if found is None:
            trials.append((rho, f"no order-{n0 or '<=64'} arc inside inner domain"))
            continue
        trials.append((rho, "ok"))
        return RhoArcChoice(rho=rho, arc=found, trials=tuple(trials))
    lines = ", ".join(f"rho={r:.6g}: {v}" for r, v in trials)
    raise GeometryError(f"no trial radius admissible ({lines})")


# ---------------------------------------------------------------------------
# Rotation orbits


def orbit_centers(points: Sequence, n0: int, tol: float = COINCIDENCE_TOL):
    """Deduplicated orbit {rotate(p, k, n0)} with an index map.

    Returns (centers, index_map) where index_map[(i, k)] is the center
    index of rotate(points[i], k, n0).  Exact coincidences (within tol)
    merge; rings of the dyadic layout that are n0-symmetric collapse here.
    """
    centers: list = []
    index_map = {}
    for i, p in enumerate(points):
        for k in range(n0):
            w = rotate(p, k, n0)
            hit = None
            for ci, c in enumerate(centers):
                if abs(c - w) <= tol:
                    hit = ci
                    break
            if hit is None:
                centers.append(w)
                hit = len(centers) - 1
            index_map[(i, k)] = hit
    return centers, index_map

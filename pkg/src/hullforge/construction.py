"""Counterexample assembly: cap schedules, stage selection, full bundles.

Three layers build on each other.  A Schedule turns certified disc radii
into per-pole coefficient caps R_n = rho_n/n^2 whose summability record
(C_1 = sum R_n/rho_n with an exact tail bracket) is what keeps every
partial sum uniformly bounded later.  combine_caps intersects those caps
with the boundary-separation caps of a nearest-pole layout.
select_epsilons runs the staged induction for the lacunary series: pick
each stage weight below its ring cap, halve until every recorded
inequality holds in exact rational arithmetic, and log all of them with
margins so an independent integer-only checker can replay the whole
argument.  assemble_counterexample chains the full pipeline and returns
the series together with a serializable certificate bundle.

Determinism: every Monte Carlo seed is derived from the config seed by
enumeration order, no wall clock is read anywhere, and the audit log is
order-normalized before serialization, so identical configs reproduce
byte-identical bundles.
"""

from __future__ import annotations

import cmath
import math
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Optional, Sequence

from .certificates import Certificate, content_hash
from .geometry import (
    COINCIDENCE_TOL,
    Disc,
    Lemma1Data,
    Plane,
    lemma1_poles,
    orbit_centers,
    select_rho_and_arc,
    theorem2_positions,
)
from .harmonic import (
    HOLE_FLOOR,
    MeasureError,
    WalkConfig,
    verify_arc_bound,
    verify_outer_bound,
)
from .probes import hull_evidence
from .series import (
    LacunarySeries,
    PoleSeries,
    TaylorWitness,
    default_witness_threshold,
    lacunary_coefficient,
    lemma1_liminf_check,
    radius_witness,
    ring_radius,
    smoothness_constants,
)
from .thinness import (
    ThinnessCertificate,
    build_potential,
    choose_disc_radii,
    verify_thinness,
)

__all__ = [
    "ConstructionError",
    "Schedule",
    "AuditEntry",
    "SelectionState",
    "BuildConfig",
    "theorem_example_schedule",
    "build_hull_schedule",
    "combine_caps",
    "select_epsilons",
    "recheck_selection",
    "assemble_counterexample",
    "bundle_valid",
]

# halving a stage weight below cap * 2^-EPSILON_FLOOR_BITS means some
# strict inequality is genuinely violated, not merely tight
EPSILON_FLOOR_BITS = 256

# anchor-decay back-off: rounds of forced halving before giving up, and
# extra halvings past the computed deficit so the fixed row clears its
# predecessor strictly instead of landing on it
BACKOFF_ROUNDS = 8
BACKOFF_MARGIN = 8

# exact-arithmetic cost guards; both overridable, with a warning, since
# scan work grows with 2^J blocks and k_max-deep tail checks
MAX_STAGES = 8
MAX_SCAN = 1 << 20

DEFAULT_SELECTION_SCAN = 1 << 16


class ConstructionError(ValueError):
    """Raised when a schedule, selection, or assembly cannot proceed."""


def _dyadic_fraction(exponent: int) -> Fraction:
    if exponent < 1:
        raise ConstructionError(
            f"dyadic radius exponent must be at least 1, got {exponent}"
        )
    return Fraction(1, 2**exponent)


# ---------------------------------------------------------------------------
# Cap schedules


@dataclass(frozen=True)
class Schedule:
    """Per-pole coefficient caps over certified disc radii.

    caps[n] bounds |c_{n+1}| (1-based pole n+1).  In the plain mode the
    caps are exactly rho_n/n^2; a combined schedule has taken a
    per-index minimum with boundary-separation caps and records the
    winning source per index.  c1 and cap_sum carry exact partial sums
    plus tail bounds valid for any infinite continuation that keeps
    R_n <= rho_n/n^2 with rho_n < 1, so both totals are certified
    finite, which is the summability the series bounds consume.
    """

    poles: tuple
    radii: tuple
    caps: tuple
    combined: bool = False
    cap_sources: tuple = ()
    c1_partial: Fraction = Fraction(0)
    c1_tail: Fraction = Fraction(0)
    cap_sum_partial: Fraction = Fraction(0)
    cap_sum_tail: Fraction = Fraction(0)
    anchor: complex = 0j
    potential_ref: Optional[str] = None
    input_hashes: Mapping = field(default_factory=dict)

    def __post_init__(self) -> None:
        n = len(self.radii)
        if n == 0:
            raise ConstructionError("a schedule needs at least one pole")
        if len(self.caps) != n or len(self.poles) != n:
            raise ConstructionError(
                f"{len(self.poles)} poles, {n} radii, {len(self.caps)} caps"
            )
        for i, (rho, cap) in enumerate(zip(self.radii, self.caps)):
            if not (isinstance(rho, Fraction) and isinstance(cap, Fraction)):
                raise ConstructionError("radii and caps must be Fractions")
            if rho <= 0 or cap <= 0:
                raise ConstructionError(
                    f"index {i + 1}: radius {rho} and cap {cap} must be "
                    f"positive"
                )
            if rho >= 1:
                raise ConstructionError(f"radius {rho} at index {i + 1} "
                                        f"not below 1")
        if not self.combined:
            for i, (rho, cap) in enumerate(zip(self.radii, self.caps)):
                if cap != rho / (i + 1) ** 2:
                    raise ConstructionError(
                        f"cap {i + 1} is not rho/n^2: {cap} vs "
                        f"{rho / (i + 1) ** 2}"
                    )
        if self.combined and len(self.cap_sources) != n:
            raise ConstructionError("combined schedule without cap sources")
        for s in self.cap_sources:
            if s not in ("hull", "lemma1"):
                raise ConstructionError(f"unknown cap source {s!r}")

    def __len__(self) -> int:
        return len(self.radii)

    def c1(self) -> Fraction:
        """Upper bound on sum caps_n/rho_n over the infinite intent."""
        return self.c1_partial + self.c1_tail

    def cap_sum(self) -> Fraction:
        """Upper bound on sum caps_n, the absolute-summability budget."""
        return self.cap_sum_partial + self.cap_sum_tail

    def ring_caps(self, stages: int) -> tuple:
        """Per-ring caps R'_j = min over 1-based indices 2^j..2^(j+1)-1.

        The ring layout needs every index of every requested ring to be
        scheduled, so stages J requires 2^(J+1)-1 caps.
        """
        if stages < 0:
            raise ConstructionError(f"stages must be nonnegative: {stages}")
        out = []
        for j in range(stages + 1):
            lo, hi = 1 << j, (1 << (j + 1)) - 1
            if hi > len(self.caps):
                raise ConstructionError(
                    f"ring {j} covers indices {lo}..{hi} but only "
                    f"{len(self.caps)} caps are scheduled"
                )
            out.append(min(self.caps[n - 1] for n in range(lo, hi + 1)))
        return tuple(out)

    def to_dict(self) -> dict:
        return {
            "kind": "cap_schedule",
            "valid": True,
            "poles": list(self.poles),
            "radii": list(self.radii),
            "caps": list(self.caps),
            "combined": self.combined,
            "cap_sources": list(self.cap_sources),
            "c1_partial": self.c1_partial,
            "c1_tail": self.c1_tail,
            "cap_sum_partial": self.cap_sum_partial,
            "cap_sum_tail": self.cap_sum_tail,
            "anchor": self.anchor,
            "potential_ref": self.potential_ref,
            "input_hashes": dict(self.input_hashes),
        }


def theorem_example_schedule(poles: Sequence, exponents: Sequence,
                             anchor: complex = 0j,
                             potential_ref: Optional[str] = None,
                             input_hashes: Optional[Mapping] = None,
                             ) -> Schedule:
    """Caps R_n = rho_n/n^2 over dyadic radii rho_n = 2^-exponents[n-1].

    The tail bounds use sum_{n>N} 1/n^2 < 1/N (telescoping against
    1/(n(n-1))) and rho_n < 1, so they stay valid for any continuation
    of the same shape; both partial sums are exact rationals.
    """
    poles = tuple(poles)
    exponents = tuple(exponents)
    if not poles:
        raise ConstructionError("a schedule needs at least one pole")
    if len(poles) != len(exponents):
        raise ConstructionError(
            f"{len(poles)} poles but {len(exponents)} radius exponents"
        )
    radii = tuple(_dyadic_fraction(m) for m in exponents)
    caps = tuple(rho / (n + 1) ** 2 for n, rho in enumerate(radii))
    count = len(radii)
    tail = Fraction(1, count)
    return Schedule(
        poles=tuple(complex(p) for p in poles),
        radii=radii,
        caps=caps,
        combined=False,
        cap_sources=(),
        c1_partial=sum((Fraction(1, (n + 1) ** 2) for n in range(count)),
                       Fraction(0)),
        c1_tail=tail,
        cap_sum_partial=sum(caps, Fraction(0)),
        cap_sum_tail=tail,
        anchor=complex(anchor),
        potential_ref=potential_ref,
        input_hashes=dict(input_hashes or {}),
    )


def build_hull_schedule(thinness: ThinnessCertificate,
                        measure_certs: Sequence[Certificate],
                        anchor: complex = 0j) -> Schedule:
    """Cap schedule over a certified thin perforation of the arena.

    Prerequisites: the thinness certificate is valid, and the measure
    certificates contain at least one valid full-circle and one valid
    arc lower bound (the sampled stages are the caller's policy).  Every
    input certificate is referenced by content hash in the result.  The
    schedule's poles are reported in the original frame: scheduled
    positions plus the anchor the arena machinery subtracted.
    """
    if not thinness.valid:
        raise ConstructionError(
            "thinness certificate invalid; the perforation is not known "
            "to be thin, so no cap schedule can rest on it"
        )
    outer = [c for c in measure_certs
             if c.kind == "outer_measure_lower_bound"]
    arcs = [c for c in measure_certs if c.kind == "arc_measure_lower_bound"]
    if not outer or not arcs:
        raise ConstructionError(
            "missing prerequisite certificates: need at least one "
            "full-circle and one arc measure lower bound"
        )
    bad = [
        f"{c.kind}[stage {c.inputs.get('stage', '?')}]"
        for c in measure_certs if not c.valid
    ]
    if bad:
        raise ConstructionError(
            f"invalid prerequisite certificates: {', '.join(bad)}"
        )
    sched = thinness.schedule
    hashes = {"thinness": content_hash(thinness.to_dict())}
    for c in measure_certs:
        hashes[f"{c.kind}_stage_{c.inputs.get('stage', '?')}"] = c.hash()
    return theorem_example_schedule(
        poles=[p + anchor for p in sched.poles],
        exponents=sched.exponents,
        anchor=anchor,
        potential_ref=hashes["thinness"],
        input_hashes=hashes,
    )


def combine_caps(hull: Schedule, lemma1: Lemma1Data) -> Schedule:
    """Per-index minimum of hull caps and boundary-separation caps.

    Both inputs must describe the same pole sequence (original frame,
    index for index).  The result records which source won at each
    index; every combined cap is <= both inputs by construction, so the
    summability records only shrink.
    """
    if len(hull) != len(lemma1.poles):
        raise ConstructionError(
            f"pole sequences differ: schedule has {len(hull)}, layout "
            f"has {len(lemma1.poles)}"
        )
    for n, (a, b) in enumerate(zip(hull.poles, lemma1.poles)):
        if abs(a - b) > COINCIDENCE_TOL:
            raise ConstructionError(
                f"pole sequences differ at index {n + 1}: {a} vs {b}"
            )
    caps, sources = [], []
    for n in range(len(hull)):
        lemma_cap = Fraction(lemma1.caps[n])
        if lemma_cap <= 0:
            raise ConstructionError(
                f"layout cap {n + 1} is not positive: {lemma_cap}"
            )
        if lemma_cap < hull.caps[n]:
            caps.append(lemma_cap)
            sources.append("lemma1")
        else:
            caps.append(hull.caps[n])
            sources.append("hull")
    return Schedule(
        poles=hull.poles,
        radii=hull.radii,
        caps=tuple(caps),
        combined=True,
        cap_sources=tuple(sources),
        c1_partial=sum((c / r for c, r in zip(caps, hull.radii)),
                       Fraction(0)),
        c1_tail=hull.c1_tail,
        cap_sum_partial=sum(caps, Fraction(0)),
        cap_sum_tail=hull.cap_sum_tail,
        anchor=hull.anchor,
        potential_ref=hull.potential_ref,
        input_hashes=dict(hull.input_hashes),
    )


# ---------------------------------------------------------------------------
# Stage selection


@dataclass(frozen=True)
class AuditEntry:
    """One recorded inequality: lhs sense rhs, with its exact margin."""

    family: str  # "caps" | "Cn" | "smooth" | "radius"
    stage: int
    label: str
    lhs: Fraction
    rhs: Fraction
    sense: str  # "<" | ">" | "=="
    margin: Fraction

    def holds(self) -> bool:
        if self.sense == "<":
            return self.lhs < self.rhs
        if self.sense == ">":
            return self.lhs > self.rhs
        return self.lhs == self.rhs

    def to_dict(self) -> dict:
        return {
            "family": self.family,
            "stage": self.stage,
            "label": self.label,
            "lhs": self.lhs,
            "rhs": self.rhs,
            "sense": self.sense,
            "margin": self.margin,
        }


@dataclass(frozen=True)
class SelectionState:
    """Outcome of the staged weight selection with its full audit log.

    epsilons[j] is the chosen stage-j weight (below ring_caps[j], equal
    for stage 0), constants[l] the growth constant the order-l bounds
    were checked against, witnesses[j] the Taylor index certifying the
    stage-j radius.  Every strict inequality the construction consumed
    appears exactly once in audit with an exact rational margin.
    """

    stage: int
    epsilons: tuple
    ring_caps: tuple
    constants: tuple
    witnesses: tuple
    audit: tuple
    order: int
    k_max: int
    halvings: tuple

    def series(self) -> LacunarySeries:
        return LacunarySeries(self.epsilons)

    def to_dict(self) -> dict:
        entries = sorted(
            (e.to_dict() for e in self.audit),
            key=lambda d: (d["stage"], d["family"], d["label"]),
        )
        return {
            "kind": "epsilon_selection",
            "valid": all(e.holds() for e in self.audit),
            "stage": self.stage,
            "epsilons": list(self.epsilons),
            "ring_caps": list(self.ring_caps),
            "constants": list(self.constants),
            "order": self.order,
            "k_max": self.k_max,
            "halvings": list(self.halvings),
            "witnesses": [_witness_dict(w) for w in self.witnesses],
            "audit": entries,
        }


def _witness_dict(w: TaylorWitness) -> dict:
    return {
        "kind": "radius_witness",
        "valid": w.margin > 0,
        "stage": w.stage,
        "index": w.index,
        "coefficient": w.coefficient,
        "threshold": w.threshold,
        "margin": w.margin,
        "root_value": w.root_value(),
    }


def _stage_sups(epsilons: Sequence[Fraction], order: int,
                k_max: int) -> tuple:
    """Certified sup_k d_k k^l, l = 0..order, of the truncated series."""
    cert = smoothness_constants(LacunarySeries(tuple(epsilons)), order,
                                k_max)
    return cert.constants


def _smooth_entries(stage: int, sups: Sequence[Fraction],
                    constants: Sequence[Fraction]) -> list:
    out = []
    for l in range(stage + 1):
        out.append(AuditEntry(
            family="smooth",
            stage=stage,
            label=f"sup_k d[{stage},k] k^{l} < C_{l}",
            lhs=sups[l],
            rhs=constants[l],
            sense="<",
            margin=constants[l] - sups[l],
        ))
    return out


def _radius_entries(stage: int, epsilons: Sequence[Fraction],
                    witnesses: Sequence[TaylorWitness]) -> list:
    """Survival of all earlier witnesses in the enlarged series."""
    series = LacunarySeries(tuple(epsilons))
    out = []
    for w in witnesses:
        d = lacunary_coefficient(series, w.index)
        thr = (1 / w.threshold) ** w.index
        out.append(AuditEntry(
            family="radius",
            stage=stage,
            label=f"d[{stage},{w.index}] > rho'_{w.stage}^-{w.index}",
            lhs=d,
            rhs=thr,
            sense=">",
            margin=d - thr,
        ))
    return out


def select_epsilons(ring_caps: Sequence, smooth_order: int,
                    k_max: int = DEFAULT_SELECTION_SCAN,
                    max_stages: int = MAX_STAGES,
                    forced_halvings: Sequence = ()) -> SelectionState:
    """Choose stage weights under the ring caps by halving search.

    Stage 0 takes its cap exactly.  Each later stage n first fixes
    C_n = 2 * sup_k d_{n-1,k} k^n (strict headroom over the certified
    sup of the series built so far), then halves the candidate weight
    from cap/2 until the enlarged series keeps sup_k d_{n,k} k^l < C_l
    for every l <= n and every earlier witness index still beats its
    threshold; finally the stage's own witness is found.  All decisions
    are exact; the audit log records each inequality with its margin.

    forced_halvings[n] extra halvings are applied to stage n before the
    search starts (the halving floor shifts down by the same amount, so
    the search budget is unchanged).  Every constraint is monotone in
    the direction of smaller weights, so forcing can only tighten a
    feasible selection; the assembly uses it to push later stages down
    until the probe decay at the anchor is strictly monotone.
    """
    caps = tuple(Fraction(c) for c in ring_caps)
    forced = tuple(int(h) for h in forced_halvings)
    if any(h < 0 for h in forced):
        raise ConstructionError(f"forced halvings must be nonnegative, "
                                f"got {forced}")
    if len(forced) > len(caps):
        raise ConstructionError(
            f"{len(forced)} forced-halving entries for {len(caps)} stages"
        )
    if forced and forced[0] != 0:
        raise ConstructionError(
            "stage 0 takes its cap exactly and cannot be forced down"
        )
    if not caps:
        raise ConstructionError("need at least one ring cap")
    for j, c in enumerate(caps):
        if c <= 0:
            raise ConstructionError(
                f"caps must be positive; ring {j} cap is {c}"
            )
    stages = len(caps) - 1
    if stages > max_stages:
        raise ConstructionError(
            f"{stages} stages exceeds the cost guard {max_stages}; pass "
            f"max_stages explicitly to go higher (scan work grows with "
            f"2^J blocks)"
        )
    if max_stages > MAX_STAGES:
        warnings.warn(
            f"max_stages {max_stages} above {MAX_STAGES}: exact scans "
            f"grow with 2^J blocks and may take very long",
            stacklevel=2,
        )
    if smooth_order < 0:
        raise ConstructionError(f"smooth order must be nonnegative, "
                                f"got {smooth_order}")
    if k_max > MAX_SCAN:
        warnings.warn(
            f"k_max {k_max} above {MAX_SCAN}: tail checks at this depth "
            f"are expensive",
            stacklevel=2,
        )

    audit: list = []
    epsilons: list = []
    constants: list = []
    witnesses: list = []
    halvings: list = []

    def stage_witness(n: int) -> None:
        w = radius_witness(LacunarySeries(tuple(epsilons[:n + 1])), n)
        witnesses.append(w)
        audit.append(AuditEntry(
            family="radius", stage=n,
            label=f"d[{n},{w.index}] > rho'_{n}^-{w.index}",
            lhs=w.coefficient,
            rhs=(1 / w.threshold) ** w.index,
            sense=">",
            margin=w.margin,
        ))

    # stage 0: the cap itself, with doubled headroom for the constant
    epsilons.append(caps[0])
    audit.append(AuditEntry(
        family="caps", stage=0, label="eps_0 == R'_0",
        lhs=caps[0], rhs=caps[0], sense="==", margin=Fraction(0),
    ))
    sups = _stage_sups(epsilons, 0, k_max)
    constants.append(2 * sups[0])
    audit.extend(_smooth_entries(0, sups, constants))
    halvings.append(0)
    stage_witness(0)

    for n in range(1, stages + 1):
        sup_prev = _stage_sups(epsilons, n, k_max)[n]
        c_n = 2 * sup_prev
        constants.append(c_n)
        audit.append(AuditEntry(
            family="Cn", stage=n,
            label=f"C_{n} > sup_k d[{n - 1},k] k^{n}",
            lhs=c_n, rhs=sup_prev, sense=">", margin=c_n - sup_prev,
        ))

        pre = forced[n] if n < len(forced) else 0
        candidate = caps[n] / 2**(1 + pre)
        floor = caps[n] / 2**(EPSILON_FLOOR_BITS + pre)
        count = pre
        while True:
            trial = epsilons + [candidate]
            sups = _stage_sups(trial, n, k_max)
            smooth_ok = all(sups[l] < constants[l] for l in range(n + 1))
            radius_rows = _radius_entries(n, trial, witnesses)
            if smooth_ok and all(e.holds() for e in radius_rows):
                audit.extend(_smooth_entries(n, sups, constants))
                audit.extend(radius_rows)
                break
            candidate /= 2
            count += 1
            if candidate < floor:
                broken = next(
                    (f"sup_k d[{n},k] k^{l} < C_{l}"
                     for l in range(n + 1) if not sups[l] < constants[l]),
                    None,
                ) or next(e.label for e in radius_rows if not e.holds())
                raise ConstructionError(
                    f"stage {n}: halving passed 2^-{EPSILON_FLOOR_BITS} "
                    f"of the cap without satisfying {broken}; the "
                    f"inequality is genuinely violated"
                )
        epsilons.append(candidate)
        audit.append(AuditEntry(
            family="caps", stage=n, label=f"eps_{n} < R'_{n}",
            lhs=candidate, rhs=caps[n], sense="<",
            margin=caps[n] - candidate,
        ))
        halvings.append(count)
        stage_witness(n)

    # orders past the last stage: constants pinned from the final
    # series with the same doubled headroom, no further halving
    if smooth_order > stages:
        final = _stage_sups(epsilons, smooth_order, k_max)
        for l in range(stages + 1, smooth_order + 1):
            constants.append(2 * final[l])
            audit.append(AuditEntry(
                family="smooth", stage=stages,
                label=f"sup_k d[{stages},k] k^{l} < C_{l}",
                lhs=final[l], rhs=constants[l], sense="<",
                margin=final[l],
            ))

    return SelectionState(
        stage=stages,
        epsilons=tuple(epsilons),
        ring_caps=caps,
        constants=tuple(constants),
        witnesses=tuple(witnesses),
        audit=tuple(audit),
        order=max(stages, smooth_order),
        k_max=k_max,
        halvings=tuple(halvings),
    )


# ---------------------------------------------------------------------------
# Independent audit re-check (integer arithmetic only)


class _IntCoeffScan:
    """Stride-updated integer pairs for d_{n,k} along k = 1, 2, ...

    Shares no code with the Fraction route: every term is kept as a raw
    (numerator, denominator) integer pair p v^(k+2^j) / (q u^(k+2^j)),
    advanced by single multiplications per step.
    """

    def __init__(self, eps_pairs: Sequence, stage: int):
        self.stage = stage
        self.terms = []
        for j in range(stage + 1):
            p, q = eps_pairs[j]
            u, v = j + 2, j + 1
            block = 1 << j
            self.terms.append({
                "u": u, "v": v, "block": block,
                "num": p * v ** (1 + block),
                "den": q * u ** (1 + block),
            })
        self.k = 1

    def value_pair(self):
        """d_{stage,k} as one exact integer pair."""
        num, den = 0, 1
        for t in self.terms:
            if self.k % t["block"] == 0:
                num = num * t["den"] + t["num"] * den
                den *= t["den"]
        return num, den

    def advance(self) -> None:
        for t in self.terms:
            t["num"] *= t["v"]
            t["den"] *= t["u"]
        self.k += 1


def _int_pair_of(f: Fraction):
    return f.numerator, f.denominator


def _int_sup(eps_pairs: Sequence, stage: int, weight: int,
             hard_stop: int = 1 << 20):
    """Global sup_k d_{stage,k} k^weight as an integer pair.

    Scans until the envelope d_{stage,0} (v/u)^k k^weight is decreasing
    and below the running max, which certifies every unscanned k at
    once; the envelope holds because every ring factor v_j/u_j is at
    most v_stage/u_stage.
    """
    u, v = stage + 2, stage + 1
    # E = d_{stage,0} as a pair
    e_num, e_den = 0, 1
    for j in range(stage + 1):
        p, q = eps_pairs[j]
        uj, vj = j + 2, j + 1
        block = 1 << j
        tn, td = p * vj**block, q * uj**block
        e_num = e_num * td + tn * e_den
        e_den *= td
    scan = _IntCoeffScan(eps_pairs, stage)
    best_num, best_den, best_at = 0, 1, 0
    upow, vpow = u, v  # u^k, v^k at the current k
    while True:
        k = scan.k
        if k > hard_stop:
            raise ConstructionError(
                f"integer re-check scan passed {hard_stop} without the "
                f"envelope closing; stage {stage}, weight {weight}"
            )
        num, den = scan.value_pair()
        kw = k**weight
        if num * kw * best_den > best_num * den:
            best_num, best_den, best_at = num * kw, den, k
        # envelope closure: ratio decreasing from here on and the k+1
        # envelope value already under the running max
        ratio_ok = (k + 2) ** weight * v <= (k + 1) ** weight * u
        if ratio_ok and best_num > 0:
            lhs = e_num * (k + 1) ** weight * vpow * v * best_den
            rhs = best_num * e_den * upow * u
            if lhs <= rhs:
                return best_num, best_den, best_at
        scan.advance()
        upow *= u
        vpow *= v


def _int_coefficient(eps_pairs: Sequence, stage: int, k: int):
    """d_{stage,k} as an integer pair, direct divisor sum."""
    num, den = 0, 1
    for j in range(stage + 1):
        block = 1 << j
        if k % block == 0:
            p, q = eps_pairs[j]
            uj, vj = j + 2, j + 1
            tn, td = p * vj ** (k + block), q * uj ** (k + block)
            num = num * td + tn * den
            den *= td
    return num, den


def recheck_selection(state: SelectionState) -> tuple:
    """Replay every audited inequality through raw integer arithmetic.

    Independent of the selection path end to end: coefficients, sups,
    and comparisons are rebuilt from integer pairs (no Fractions in any
    decision), sups cover all k via the integer envelope argument, and
    the smooth grid is widened to every (l, j) pair up to the final
    stage.  Returns a tuple of violation descriptions; empty means the
    full audit log is confirmed.
    """
    bad: list = []
    stages = state.stage
    eps_pairs = [_int_pair_of(e) for e in state.epsilons]
    cap_pairs = [_int_pair_of(c) for c in state.ring_caps]
    const_pairs = [_int_pair_of(c) for c in state.constants]

    by_label = {}
    for e in state.audit:
        if e.label in by_label:
            bad.append(f"duplicate audit entry: {e.label}")
        by_label[e.label] = e

    # bookkeeping: every recorded margin must match its lhs/rhs exactly
    for e in state.audit:
        want = e.rhs - e.lhs if e.sense == "<" else \
            e.lhs - e.rhs if e.sense == ">" else Fraction(0)
        if e.margin != want:
            bad.append(f"margin mismatch on {e.label}: recorded "
                       f"{e.margin}, recomputed {want}")
        if not e.holds():
            bad.append(f"audit entry fails its own inequality: {e.label}")

    # caps family
    p0, q0 = eps_pairs[0]
    c0n, c0d = cap_pairs[0]
    if p0 * c0d != c0n * q0:
        bad.append("eps_0 != R'_0")
    if "eps_0 == R'_0" not in by_label:
        bad.append("missing audit entry: eps_0 == R'_0")
    for n in range(1, stages + 1):
        pn, qn = eps_pairs[n]
        cn, cd = cap_pairs[n]
        if not pn * cd < cn * qn:
            bad.append(f"eps_{n} not strictly below its ring cap")
        if f"eps_{n} < R'_{n}" not in by_label:
            bad.append(f"missing audit entry: eps_{n} < R'_{n}")

    # full smooth grid: j <= stages, l up to the certified order, each
    # sup covering all k through the envelope argument
    top = len(const_pairs) - 1
    sups: dict = {}
    for j in range(stages + 1):
        for l in range(top + 1):
            sn, sd, _ = _int_sup(eps_pairs, j, l)
            sups[(j, l)] = (sn, sd)
            cn, cd = const_pairs[l]
            if not sn * cd < cn * sd:
                bad.append(f"sup_k d[{j},k] k^{l} reaches C_{l}")
    audited = [(j, l) for j in range(stages + 1) for l in range(j + 1)]
    audited += [(stages, l) for l in range(stages + 1, top + 1)]
    for j, l in audited:
        label = f"sup_k d[{j},k] k^{l} < C_{l}"
        entry = by_label.get(label)
        if entry is None:
            bad.append(f"missing audit entry: {label}")
            continue
        sn, sd = sups[(j, l)]
        en, ed = _int_pair_of(entry.lhs)
        if sn * ed != en * sd:
            bad.append(f"recorded sup differs on {label}")

    # Cn family: doubled headroom over the previous stage's sup
    for n in range(1, stages + 1):
        label = f"C_{n} > sup_k d[{n - 1},k] k^{n}"
        entry = by_label.get(label)
        if entry is None:
            bad.append(f"missing audit entry: {label}")
            continue
        sn, sd, _ = _int_sup(eps_pairs[:n], n - 1, n)
        cn, cd = const_pairs[n]
        if not cn * sd > sn * cd:
            bad.append(f"C_{n} does not exceed the stage-{n - 1} sup")
        en, ed = _int_pair_of(entry.rhs)
        if sn * ed != en * sd:
            bad.append(f"recorded sup differs on {label}")

    # radius family: every witness index beats its threshold at its own
    # stage and at every later stage
    for w in state.witnesses:
        tn, td = _int_pair_of(w.threshold)  # rho' = tn/td > 1
        for m in range(w.stage, stages + 1):
            num, den = _int_coefficient(eps_pairs, m, w.index)
            # d > (td/tn)^k  <=>  num tn^k > td^k den
            if not num * tn**w.index > td**w.index * den:
                bad.append(
                    f"witness k_{w.stage}={w.index} fails at stage {m}"
                )
            label = f"d[{m},{w.index}] > rho'_{w.stage}^-{w.index}"
            if label not in by_label:
                bad.append(f"missing audit entry: {label}")

    # audit completeness: nothing in the log beyond the families above
    expected = (
        (stages + 1)  # caps
        + stages  # Cn
        + (stages + 1) * (stages + 2) // 2  # smooth triangles
        + max(0, top - stages)  # orders past the last stage
        + (stages + 1) * (stages + 2) // 2  # witness + survival rows
    )
    if len(state.audit) != expected:
        bad.append(
            f"audit log has {len(state.audit)} entries, expected "
            f"{expected}"
        )
    return tuple(bad)


# ---------------------------------------------------------------------------
# End-to-end assembly


@dataclass(frozen=True)
class BuildConfig:
    """Everything a full build consumes, with deterministic seeding.

    Per-stage Monte Carlo seeds are derived from seed by enumeration
    order, so equal configs give byte-identical bundles.  Fields default
    to the standard demonstration sizes; n_max extends how many poles
    the arena machinery certifies beyond what stages strictly needs.
    """

    seed: int
    stages: int = 3
    pole_count: int = 8
    smooth_order: int = 3
    stage_sample: tuple = (1, 2, 5, 10)
    n_walks: int = 20000
    eps_boundary: float = 1e-6
    threads: int = 1
    k_max: int = DEFAULT_SELECTION_SCAN
    rho_trials: tuple = ()
    n0: Optional[int] = None
    hole_floor: float = HOLE_FLOOR
    anchor_angle: Optional[float] = None
    n_max: Optional[int] = None

    def __post_init__(self):
        if not isinstance(self.seed, int) or self.seed < 0:
            raise ConstructionError(f"seed must be a nonnegative integer, "
                                    f"got {self.seed!r}")
        if self.stages < 0:
            raise ConstructionError(f"stage count must be nonnegative, "
                                    f"got {self.stages}")
        if self.pole_count < 1:
            raise ConstructionError(f"need at least one pole, got "
                                    f"{self.pole_count}")
        if not self.stage_sample:
            raise ConstructionError("stage_sample must name at least one "
                                    "measure stage")
        if any(int(n) != n or n < 1 for n in self.stage_sample):
            raise ConstructionError(f"measure stages must be positive "
                                    f"integers, got {self.stage_sample}")
        if self.n0 is not None and self.n0 < 1:
            raise ConstructionError(f"symmetry order must be positive, "
                                    f"got {self.n0}")
        if self.n_max is not None and self.n_max < 1:
            raise ConstructionError(f"n_max must be positive, got "
                                    f"{self.n_max}")


def _aborted_cert(kind: str, stage: int, err: Exception) -> Certificate:
    """Invalid placeholder recording why a measure stage died."""
    return Certificate(
        kind=kind, valid=False, bound=0.0, value=0.0, margin=0.0,
        method=f"aborted: {err}", inputs={"stage": stage}, payload={},
    )


def _certify_frame(poles: Sequence, anchor: complex, n0: Optional[int],
                   rho_trials: Sequence, config: BuildConfig):
    """Thinness plus sampled measure bounds for a translated pole set.

    Works entirely in the shifted frame (anchor at the origin).  With n0
    unset the smallest symmetry order admitting a rational arc inside
    the shifted domain is used.  Rotation preserves magnitudes, so
    forbidding the bare poles keeps the circle clear of the whole orbit.
    Measure stages never raise: a dead stage becomes an invalid
    certificate so the caller can return a flagged partial bundle.
    """
    choice = select_rho_and_arc(
        Disc(-anchor, 1.0), Plane(),
        [(p, COINCIDENCE_TOL) for p in poles],
        list(rho_trials), n0=n0,
    )
    order = choice.arc.n0
    centers, _ = orbit_centers(poles, order)
    pot = build_potential(centers, working_radius=choice.rho,
                          weight_mode="uniform")
    sched = choose_disc_radii(pot, poles, n0=order, rho=choice.rho)
    thin = verify_thinness(pot, sched)
    if not thin.valid:
        raise ConstructionError(
            f"thinness certification failed: {'; '.join(thin.failures[:3])}"
        )
    measures: list = []
    for i, n in enumerate(config.stage_sample):
        outer_cfg = WalkConfig(
            n_walks=config.n_walks, rng_seed=config.seed + 2 * i,
            eps_boundary=config.eps_boundary, threads=config.threads,
        )
        try:
            outer = verify_outer_bound(sched, n, outer_cfg, thinness=thin,
                                       hole_floor=config.hole_floor)
        except MeasureError as err:
            outer = _aborted_cert("outer_measure_lower_bound", n, err)
        arc_cfg = WalkConfig(
            n_walks=config.n_walks, rng_seed=config.seed + 2 * i + 1,
            eps_boundary=config.eps_boundary, threads=config.threads,
        )
        try:
            arc = verify_arc_bound(sched, choice.arc, n, arc_cfg,
                                   thinness=thin,
                                   hole_floor=config.hole_floor)
        except MeasureError as err:
            arc = _aborted_cert("arc_measure_lower_bound", n, err)
        measures.append(outer)
        measures.append(arc)
    return sched, thin, choice, measures


def _measure_docs(measures: Sequence[Certificate]) -> dict:
    docs = {}
    for c in measures:
        stage = c.inputs.get("stage", "x")
        short = "outer" if c.kind.startswith("outer") else "arc"
        docs[f"{short}_measure_stage_{stage}"] = c.to_dict()
    return docs


def _config_echo(config: BuildConfig) -> dict:
    return {
        "seed": config.seed, "stages": config.stages,
        "pole_count": config.pole_count,
        "smooth_order": config.smooth_order,
        "stage_sample": list(config.stage_sample),
        "n_walks": config.n_walks, "eps_boundary": config.eps_boundary,
        "threads": config.threads, "k_max": config.k_max,
        "rho_trials": list(config.rho_trials),
        "n0": config.n0, "hole_floor": config.hole_floor,
        "anchor_angle": config.anchor_angle, "n_max": config.n_max,
    }


def _seal(docs: dict, mode: str, config: BuildConfig, valid: bool,
          reason: Optional[str] = None) -> dict:
    """Cross-reference every document by hash in a closing summary."""
    docs["build"] = {
        "kind": "build",
        "mode": mode,
        "valid": valid,
        "reason": reason,
        "config": _config_echo(config),
        "refs": {name: content_hash(doc) for name, doc in sorted(docs.items())},
    }
    return docs


def _select_with_decay(ring_caps: Sequence, config: BuildConfig,
                       rings: int, anchor: complex):
    """Select stage weights and force the anchor decay monotone.

    The probe value at stage m is dominated by the first weight the
    probe misses, so a violation v_m >= v_{m-1} converts directly to a
    halving count for stage m+1: each halving lowers v_m by log(2)
    divided by the probe degree.  Every selection constraint is
    monotone under smaller weights, so the forced reruns stay feasible,
    and the weight ratios are so large that fixing one stage cannot
    meaningfully move the others; a handful of rounds settles it.
    """
    forced = [0] * (rings + 1)
    for attempt in range(BACKOFF_ROUNDS):
        state = select_epsilons(ring_caps, config.smooth_order,
                                k_max=config.k_max,
                                forced_halvings=forced)
        series = state.series()
        table = hull_evidence(series, range(1, rings + 1), at=anchor)
        vals = table.values()
        bad = next((i for i in range(1, len(vals))
                    if not vals[i] < vals[i - 1]), None)
        if bad is None:
            decay = {
                "kind": "anchor_decay",
                "valid": True,
                "probe_stages": list(range(1, rings + 1)),
                "values": [None if v == -math.inf else v for v in vals],
                "forced_halvings": forced,
                "rounds": attempt + 1,
            }
            return state, series, decay
        stage = bad + 1
        deficit = vals[bad] - vals[bad - 1]
        degree = (1 << (stage + 1)) - 1
        forced[stage + 1] += BACKOFF_MARGIN + max(
            1, math.ceil(deficit * degree / math.log(2)),
        )
    raise ConstructionError(
        f"anchor decay still not monotone after {BACKOFF_ROUNDS} rounds "
        f"of forced halving; forced counts reached {forced}"
    )


def _assemble_theorem2(config: BuildConfig):
    angle = math.pi / 4 if config.anchor_angle is None else \
        config.anchor_angle
    anchor = cmath.exp(1j * angle)
    rings = config.stages
    n_max = config.n_max if config.n_max is not None else \
        (1 << (rings + 1)) - 1
    depth = rings
    while (1 << (depth + 1)) - 1 < n_max:
        depth += 1
    poles = tuple(p - anchor
                  for p in theorem2_positions(depth)[:n_max])
    trials = config.rho_trials or (5.0 / 12.0,)
    sched, thin, choice, measures = _certify_frame(
        poles, anchor, config.n0, trials, config,
    )
    docs = {"thinness": thin.to_dict()}
    docs.update(_measure_docs(measures))
    if not all(c.valid for c in measures):
        bad = [c.kind for c in measures if not c.valid]
        return None, _seal(
            docs, "theorem2", config, False,
            reason=f"harmonic measure stage failed: {', '.join(bad)}",
        )

    hull = build_hull_schedule(thin, measures, anchor=anchor)
    docs["cap_schedule"] = hull.to_dict()
    state, series, decay = _select_with_decay(
        hull.ring_caps(rings), config, rings, anchor,
    )
    docs["epsilon_selection"] = state.to_dict()
    for w in state.witnesses:
        docs[f"radius_witness_stage_{w.stage}"] = _witness_dict(w)
    docs["anchor_decay"] = decay
    smooth = smoothness_constants(series, state.order, config.k_max)
    docs["smoothness"] = smooth.to_dict()
    docs["series"] = {
        "kind": "lacunary_series",
        "epsilons": list(state.epsilons),
        "rings": rings,
        "anchor": anchor,
        "arc_k0": choice.arc.k0,
        "certified_poles": len(poles),
    }
    valid = smooth.valid and all(e.holds() for e in state.audit)
    return series, _seal(docs, "theorem2", config, valid)


def _assemble_theorem1(config: BuildConfig):
    angle = math.pi / 8 if config.anchor_angle is None else \
        config.anchor_angle
    anchor = cmath.exp(1j * angle)
    data = lemma1_poles(Disc(0j, 1.0), config.pole_count)
    for p in data.poles:
        if abs(p - anchor) <= COINCIDENCE_TOL:
            raise ConstructionError(
                f"anchor {anchor:.6g} coincides with the pole {p:.6g}; "
                f"pick a different anchor angle"
            )
    translated = tuple(p - anchor for p in data.poles)
    trials = config.rho_trials or (0.5,)
    sched, thin, choice, measures = _certify_frame(
        translated, anchor, config.n0, trials, config,
    )
    docs = {"thinness": thin.to_dict()}
    docs.update(_measure_docs(measures))
    if not all(c.valid for c in measures):
        bad = [c.kind for c in measures if not c.valid]
        return None, _seal(
            docs, "theorem1", config, False,
            reason=f"harmonic measure stage failed: {', '.join(bad)}",
        )

    hull = build_hull_schedule(thin, measures, anchor=anchor)
    combined = combine_caps(hull, data)
    docs["cap_schedule"] = combined.to_dict()
    series = PoleSeries(data.poles, combined.caps)
    docs["series"] = {
        "kind": "pole_series",
        "poles": list(data.poles),
        "coefficients": list(combined.caps),
        "anchor": anchor,
        "arc_k0": choice.arc.k0,
    }
    liminf_ok = True
    for n in range(len(data.poles)):
        cert = lemma1_liminf_check(series, data, n,
                                   n_samples=data.segment_samples)
        docs[f"liminf_pole_{n}"] = cert.to_dict()
        liminf_ok = liminf_ok and cert.valid
    docs["boundary_layout"] = {
        "kind": "boundary_layout",
        "poles": list(data.poles),
        "interior": list(data.interior),
        "caps": list(data.caps),
        "segment_samples": data.segment_samples,
    }
    return series, _seal(docs, "theorem1", config, liminf_ok)


def assemble_counterexample(mode: str, config: BuildConfig):
    """Full pipeline: poles to certified series with its bundle.

    Returns (series, bundle).  The bundle maps document names to
    JSON-ready dictionaries; pass it to certificates.write_bundle to
    persist.  A failed harmonic measure stage yields (None, bundle) with
    the dead certificate flagged and the closing summary invalid; any
    other stage failure raises with that stage's error.
    """
    if mode == "theorem2":
        return _assemble_theorem2(config)
    if mode == "theorem1":
        return _assemble_theorem1(config)
    raise ConstructionError(
        f"unknown mode {mode!r}; expected theorem1 or theorem2"
    )


def bundle_valid(bundle: Mapping) -> bool:
    """True when every document carrying a validity flag asserts it."""
    ok = True
    for doc in bundle.values():
        if isinstance(doc, Mapping) and "valid" in doc:
            ok = ok and bool(doc["valid"])
    return ok

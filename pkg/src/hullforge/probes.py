"""Plurisubharmonic probes against the graph of a pole or block series.

A probe is h(z, w) = alpha log|Q(z) w - P(z)| with P/Q the cleared
partial sum of the series: the log-modulus of a polynomial on C^2, so h
is plurisubharmonic everywhere and -infinity exactly on the graph of
P/Q.  Three computations are built on it: the sup constants C_2 and A_n
of the propagation step, the propagation inequality itself with a Monte
Carlo harmonic measure plugged in, and the decay of h at the evaluation
point as the probe stage grows.

Membership in a pluripolar hull quantifies over all plurisubharmonic
functions, so none of this is a proof; every payload emitted here, and
every docstring, labels the numbers as evidence.  What makes the
propagation report worth running is one-sidedness: C_2 and A_n are
bounded from above (grid maximum plus a Lipschitz cover bound applied
under the log), the measure is an unbiased estimate with its stderr in
the pass margin, and the underlying two-constant inequality is exact,
so a correct pipeline passes and a failure beyond the stated sigma
means a bug, not noise.

Work parallelizes only inside the harmonic measure walks (the walk
config caps threads); grid maximization is a handful of vectorized
sweeps and stays single-threaded, so identical inputs give identical
reports byte for byte.
"""

from __future__ import annotations

import cmath
import csv
import io
import math
from dataclasses import dataclass, field
from fractions import Fraction
from numbers import Rational
from typing import Mapping, Optional, Sequence

import numpy as np

from .harmonic import HOLE_FLOOR, MeasureEstimate, OuterArc, WalkConfig, \
    build_arena, estimate
from .series import LacunarySeries, PoleSeries, POLE_GUARD
from . import svgplot

__all__ = [
    "EVIDENCE_NOTE",
    "EvidenceRow",
    "EvidenceTable",
    "ProbeError",
    "PshProbe",
    "TwoConstantReport",
    "hull_evidence",
    "make_probe",
    "two_constant_check",
]

EVIDENCE_NOTE = (
    "probe decay and the verified propagation inequality are evidence "
    "for hull membership; the hull quantifies over all "
    "plurisubharmonic functions and no finite computation certifies it"
)

_INF = float("inf")


class ProbeError(ValueError):
    """Raised for degenerate probe requests and unusable geometry."""


# ---------------------------------------------------------------------------
# exact polynomial arithmetic (coefficients ascending by power)


def _poly_mul(a: Sequence, b: Sequence) -> tuple:
    out = [0] * (len(a) + len(b) - 1)
    for i, ai in enumerate(a):
        if ai == 0:
            continue
        for j, bj in enumerate(b):
            if bj != 0:
                out[i + j] = out[i + j] + ai * bj
    return tuple(out)


def _poly_add(a: Sequence, b: Sequence) -> tuple:
    n = max(len(a), len(b))
    out = []
    for i in range(n):
        ai = a[i] if i < len(a) else 0
        bi = b[i] if i < len(b) else 0
        out.append(ai + bi)
    return tuple(out)


def _poly_sub(a: Sequence, b: Sequence) -> tuple:
    return _poly_add(a, _poly_scale(b, -1))


def _poly_scale(a: Sequence, s) -> tuple:
    return tuple(c * s for c in a)


def _poly_eval(coeffs: Sequence, z):
    acc = 0
    for c in reversed(coeffs):
        acc = acc * z + c
    return acc


def _log_abs(x) -> float:
    """log|x| with exact rationals kept away from float underflow."""
    if isinstance(x, Rational):
        if x == 0:
            return -_INF
        return math.log(abs(x.numerator)) - math.log(x.denominator)
    mag = abs(x)
    if mag == 0.0:
        return -_INF
    return math.log(mag)


def _magnitude_exponent(c) -> Optional[int]:
    """Rough log2|c| for scaling; None for a zero coefficient."""
    if isinstance(c, Rational):
        if c == 0:
            return None
        return c.numerator.bit_length() - c.denominator.bit_length()
    mag = abs(c)
    if mag == 0.0:
        return None
    return math.frexp(mag)[1]


_LN2 = math.log(2.0)


class _ScaledPoly:
    """Float mantissa coefficients with one shared power-of-two offset.

    Selected weights run to 2^-700 and below, which exact coefficients
    represent but float64 cannot hold against further products.  The
    largest coefficient is pulled to order one by an exact power of
    two; every log-magnitude answer adds the offset back, so no range
    of inputs silently flushes to -infinity.
    """

    def __init__(self, coeffs: Sequence):
        exps = [e for e in (_magnitude_exponent(c) for c in coeffs)
                if e is not None]
        shift = max(exps) if exps else 0
        self.log_scale = shift * _LN2
        scaled = []
        for c in coeffs:
            if isinstance(c, Rational):
                scaled.append(complex(c * Fraction(2) ** -shift))
            else:
                z = complex(c)
                scaled.append(complex(math.ldexp(z.real, -shift),
                                      math.ldexp(z.imag, -shift)))
        self.mantissas = np.asarray(scaled, dtype=np.complex128)
        self.degree = len(coeffs) - 1

    def eval(self, z: np.ndarray) -> np.ndarray:
        """Mantissa values; true magnitude is |result| e^{log_scale}."""
        acc = np.zeros_like(z, dtype=np.complex128)
        for c in self.mantissas[::-1]:
            acc = acc * z + c
        return acc

    def log_abs(self, z: np.ndarray) -> np.ndarray:
        with np.errstate(divide="ignore"):
            return np.log(np.abs(self.eval(z))) + self.log_scale

    def log_norm(self, radius: float, derivative: bool = False) -> float:
        """log of sum_k |c_k| R^k, or of sum_k k |c_k| R^{k-1}.

        A true upper bound for |p| (resp. |p'|) on |z| <= R; the float
        sum is padded one part in 10^9 to stay one-sided.
        """
        total = 0.0
        for k, c in enumerate(self.mantissas):
            if derivative:
                if k:
                    total += k * abs(c) * radius ** (k - 1)
            else:
                total += abs(c) * radius ** k
        if total == 0.0:
            return -_INF
        return math.log(total * (1.0 + 1e-9)) + self.log_scale


def _log_abs_eval(coeffs: Sequence, z) -> float:
    """log|p(z)| for one point; exact route when everything is rational."""
    if isinstance(z, Rational) and all(
            isinstance(c, Rational) for c in coeffs):
        return _log_abs(_poly_eval(coeffs, z))
    sp = _ScaledPoly(coeffs)
    return float(sp.log_abs(np.asarray(complex(z)))) + 0.0


# ---------------------------------------------------------------------------
# probes


@dataclass(frozen=True)
class PshProbe:
    """h(z, w) = weight * log|Q(z) w - P(z)|.

    The log-modulus of a polynomial on C^2 is plurisubharmonic on all
    of C^2 and equals -infinity exactly where Q(z) w = P(z), which by
    construction contains the graph of the cleared partial sum.  stage
    records which partial sum that is, in the indexing of the series
    the probe came from; anchored says whether the numerator carries
    the constant correction that pins the partial sum's value at the
    anchor point to the value of the full series.
    """

    numerator: tuple
    denominator: tuple
    weight: object
    stage: int
    anchored: bool = True
    anchor: object = 0

    def __post_init__(self) -> None:
        object.__setattr__(self, "numerator", tuple(self.numerator))
        object.__setattr__(self, "denominator", tuple(self.denominator))
        if not any(c != 0 for c in self.denominator):
            raise ProbeError("denominator polynomial is identically zero")
        if not self.weight > 0:
            raise ProbeError(f"probe weight must be positive, "
                             f"got {self.weight}")

    @property
    def degree(self) -> int:
        return len(self.denominator) - 1

    def residual(self, z, w):
        """Q(z) w - P(z), in whatever arithmetic the inputs support."""
        return _poly_eval(self.denominator, z) * w - \
            _poly_eval(self.numerator, z)

    def value(self, z, w) -> float:
        """h(z, w); exact rational inputs detect exact cancellation."""
        r = self.residual(z, w)
        if r == 0:
            return -_INF
        return float(self.weight) * _log_abs(r)


def _ring_factor(series: LacunarySeries, j: int) -> tuple:
    m = series.block(j)
    return (series.radius(j) ** m,) + (Fraction(0),) * (m - 1) + \
        (Fraction(-1),)


def _ring_denominator(series: LacunarySeries, j: int, at):
    m = series.block(j)
    if isinstance(at, Rational):
        return series.radius(j) ** m - Fraction(at) ** m
    return complex(series.radius(j) ** m) - complex(at) ** m


def _stage_factors(series, stage: int, at) -> tuple:
    """Per-term (factor polynomial, coefficient) lists plus tail terms."""
    if isinstance(series, LacunarySeries):
        if not 0 <= stage <= series.stages:
            raise ProbeError(
                f"stage {stage} outside 0..{series.stages}: the series "
                f"has no such partial sum"
            )
        factors = [_ring_factor(series, j) for j in range(stage + 1)]
        coeffs = [series.epsilons[j] for j in range(stage + 1)]
        tail = []
        for j in range(stage + 1, series.stages + 1):
            denom = _ring_denominator(series, j, at)
            if denom == 0 or abs(complex(denom)) <= POLE_GUARD:
                raise ProbeError(
                    f"evaluation point {at!r} sits on the ring of "
                    f"block {j}"
                )
            tail.append(series.epsilons[j] / denom)
        return factors, coeffs, tail
    if isinstance(series, PoleSeries):
        if not 0 <= stage <= len(series):
            raise ProbeError(
                f"stage {stage} exceeds the available {len(series)} "
                f"poles"
            )
        factors = [(-series.poles[j], 1.0 + 0j) for j in range(stage)]
        coeffs = [series.coefficient(j) for j in range(stage)]
        tail = []
        z0 = complex(at)
        for j in range(stage, len(series)):
            a = series.poles[j]
            if abs(z0 - a) <= POLE_GUARD * max(1.0, abs(a)):
                raise ProbeError(
                    f"evaluation point {at!r} sits on pole {j}"
                )
            tail.append(series.coefficient(j) / (z0 - a))
        return factors, coeffs, tail
    raise ProbeError(f"cannot probe a {type(series).__name__}")


def make_probe(series, stage: int, weight=None, *, anchored: bool = True,
               at=0) -> PshProbe:
    """Clear the stage-`stage` partial sum into an exact P/Q probe.

    stage follows the partial-sum indexing of the series type: the
    first `stage` poles of a pole series, blocks 0..stage of a block
    series.  The denominator is the product of the cleared pole
    factors; the numerator is the partial sum times the denominator,
    expanded term by term (never by numerical division).  anchored adds
    the constant tail correction at `at`, the form whose value at the
    anchor equals the full series; the correction stays exact whenever
    the series and `at` are rational.  weight defaults to 1/deg(Q),
    which keeps probe families comparable across stages.
    """
    factors, coeffs, tail = _stage_factors(series, stage, at)
    q = (Fraction(1),) if isinstance(series, LacunarySeries) else (1.0 + 0j,)
    for f in factors:
        q = _poly_mul(q, f)
    p = (0,) * max(1, len(q))
    for j, c in enumerate(coeffs):
        others = (Fraction(1),) if isinstance(series, LacunarySeries) \
            else (1.0 + 0j,)
        for i, f in enumerate(factors):
            if i != j:
                others = _poly_mul(others, f)
        p = _poly_add(p, _poly_scale(others, c))
    if anchored and tail:
        p = _poly_add(p, _poly_scale(q, sum(tail)))
    if weight is None:
        weight = Fraction(1, max(1, len(q) - 1))
    return PshProbe(numerator=tuple(p), denominator=q, weight=weight,
                    stage=stage, anchored=anchored, anchor=at)


# ---------------------------------------------------------------------------
# sup bounds by nested grids


def _grid_axis(lo: float, hi: float, count: int, periodic: bool):
    if periodic:
        vals = np.linspace(lo, hi, count, endpoint=False)
        step = (hi - lo) / count
    else:
        vals = np.linspace(lo, hi, count)
        step = (hi - lo) / (count - 1)
    return vals, step


def _shrink(vals: np.ndarray, idx: int, step: float, lo_cap: float,
            hi_cap: float) -> tuple:
    center = float(vals[idx])
    lo = max(lo_cap, center - 2.0 * step)
    hi = min(hi_cap, center + 2.0 * step)
    return lo, hi


def _product_sup(p_coeffs, q_coeffs, center: complex, rho: float,
                 w_mag: float, rounds: int, grid: int) -> tuple:
    """Upper bound and refined maximum of log|Q(z) w - P(z)|.

    z runs over the closed disc of radius rho about center, w over the
    circle |w| = w_mag, which carries the maximum over the full disc
    |w| <= w_mag because the residual is holomorphic in w.  The bound
    comes from the first full-cover grid plus a derivative-norm
    Lipschitz term added to |F| before the log; later rounds only
    refine the located maximum.
    """
    P = _ScaledPoly(p_coeffs)
    Q = _ScaledPoly(q_coeffs)
    reach = abs(center) + rho
    log_w = math.log(w_mag)

    common = max(Q.log_scale + log_w, P.log_scale)
    q_gain = math.exp(Q.log_scale + log_w - common)
    p_gain = math.exp(P.log_scale - common)

    r_lo, r_hi = 0.0, rho
    t_lo, t_hi = 0.0, 2.0 * math.pi
    f_lo, f_hi = 0.0, 2.0 * math.pi
    t_full = f_full = True

    bound = None
    best = -_INF
    best_at = (0.0, 0.0, 0.0)
    for rnd in range(rounds):
        rs, r_step = _grid_axis(r_lo, r_hi, grid, periodic=False)
        ts, t_step = _grid_axis(t_lo, t_hi, grid, periodic=t_full)
        fs, f_step = _grid_axis(f_lo, f_hi, grid, periodic=f_full)
        z = center + rs[:, None] * np.exp(1j * ts)[None, :]
        qm = Q.eval(z)
        pm = P.eval(z)
        phases = np.exp(1j * fs)
        res = q_gain * qm[:, :, None] * phases[None, None, :] - \
            p_gain * pm[:, :, None]
        with np.errstate(divide="ignore"):
            log_f = np.log(np.abs(res)) + common
        flat = int(np.argmax(log_f))
        i, j, k = np.unravel_index(flat, log_f.shape)
        round_best = float(log_f[i, j, k])
        if round_best > best:
            best = round_best
            best_at = (float(rs[i]), float(ts[j]), float(fs[k]))
        if rnd == 0:
            cover_z = 0.5 * math.hypot(r_step, rho * t_step)
            cover_w = 0.5 * w_mag * f_step
            lip_z = np.logaddexp(
                Q.log_norm(reach, derivative=True) + log_w,
                P.log_norm(reach, derivative=True),
            )
            lip_w = Q.log_norm(reach)
            log_slack = np.logaddexp(lip_z + math.log(cover_z),
                                     lip_w + math.log(cover_w))
            bound = float(np.logaddexp(round_best, log_slack))
        r_lo, r_hi = _shrink(rs, i, r_step, 0.0, rho)
        t_lo, t_hi = _shrink(ts, j, t_step, -math.inf, math.inf)
        f_lo, f_hi = _shrink(fs, k, f_step, -math.inf, math.inf)
        t_full = f_full = False
    meta = {
        "grid": grid, "rounds": rounds, "cover_z": cover_z,
        "cover_w": cover_w, "log_slack": log_slack,
        "argmax": {"radius": best_at[0], "z_angle": best_at[1],
                   "w_angle": best_at[2]},
    }
    return bound, best, meta


def _arc_sup(num_coeffs, den_coeffs, center: complex, rho: float,
             arc, rounds: int, grid: int) -> tuple:
    """Upper bound and refined maximum of log|N/D| on the closed arc.

    The numerator is bounded above by grid max plus Lipschitz cover;
    the denominator below by grid min minus the same cover, which must
    stay positive: the arc approaching a zero of D means the graph
    restricted to J runs into the probe's -infinity set and no finite
    sup exists at this resolution.
    """
    N = _ScaledPoly(num_coeffs)
    D = _ScaledPoly(den_coeffs)
    reach = abs(center) + rho
    lo_turn, hi_turn = arc.angle_fractions()
    t_lo = 2.0 * math.pi * float(lo_turn)
    t_hi = 2.0 * math.pi * float(hi_turn)

    bound_num = None
    den_floor = None
    best = -_INF
    best_angle = t_lo
    for rnd in range(rounds):
        ts, t_step = _grid_axis(t_lo, t_hi, grid, periodic=False)
        z = center + rho * np.exp(1j * ts)
        log_n = N.log_abs(z)
        log_d = D.log_abs(z)
        ratio = log_n - log_d
        i = int(np.argmax(ratio))
        if float(ratio[i]) > best:
            best = float(ratio[i])
            best_angle = float(ts[i])
        if rnd == 0:
            cover = 0.5 * rho * t_step
            lip_n = N.log_norm(reach, derivative=True)
            lip_d = D.log_norm(reach, derivative=True)
            bound_num = float(np.logaddexp(np.max(log_n),
                                           lip_n + math.log(cover)))
            min_d = float(np.exp(np.min(log_d)))
            den_floor = min_d - math.exp(lip_d) * cover
            if not den_floor > 0.0:
                raise ProbeError(
                    "the arc runs into the probe's zero set: the "
                    "denominator bound on J is not positive; perturb "
                    "the probe stage or resample the arc"
                )
        t_lo, t_hi = _shrink(ts, i, t_step, t_lo, t_hi)
    bound = bound_num - math.log(den_floor)
    meta = {
        "grid": grid, "rounds": rounds, "cover": cover,
        "den_floor": den_floor, "argmax_angle": best_angle,
    }
    return bound, best, meta


# ---------------------------------------------------------------------------
# the propagation inequality


@dataclass(frozen=True)
class TwoConstantReport:
    """One verified instance of the propagation inequality.

    c2 and a_n are one-sided upper bounds for the two sup constants,
    omega the Monte Carlo arc measure of the cut domain, implied the
    bound c2 - omega (c2 - a_n) that the measured s0 must not exceed;
    slack is three measure stderr spread over (c2 - a_n).  The check
    passes iff s0 <= implied + slack.  All quantities scale linearly
    with the probe weight and the pass flag does not.
    """

    stage: int
    probe_stage: int
    c2: float
    a_n: float
    s0: float
    omega: MeasureEstimate
    implied: float
    slack: float
    passed: bool
    w_bound: float
    c2_found: float
    a_found: float
    payload: Mapping = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "kind": "two_constant_report",
            "valid": self.passed,
            "stage": self.stage,
            "probe_stage": self.probe_stage,
            "c2": self.c2,
            "a_n": self.a_n,
            "s0": self.s0,
            "implied": self.implied,
            "slack": self.slack,
            "w_bound": self.w_bound,
            "c2_found": self.c2_found,
            "a_found": self.a_found,
            "omega": {
                "value": self.omega.value,
                "stderr": self.omega.stderr,
                "n_walks": self.omega.n_walks,
                "seed": self.omega.seed,
                "lost": self.omega.lost,
            },
            "note": EVIDENCE_NOTE,
            "payload": dict(self.payload),
        }


def _partial_count(series, n: int) -> int:
    """Poles cleared by the stage-n partial sum, in schedule order."""
    if isinstance(series, LacunarySeries):
        return (1 << (n + 1)) - 1
    return n


def two_constant_check(probe: PshProbe, series, schedule, n: int,
                       cfg: WalkConfig, *, arc, w_bound: float, at=0,
                       hole_floor: float = HOLE_FLOOR, rounds: int = 3,
                       grid: int = 64) -> TwoConstantReport:
    """Check s_n(0) <= C_2 - omega (C_2 - A_n) + 3 sigma (C_2 - A_n).

    The domain is the schedule's arena minus the half-radius discs of
    the poles cleared by the stage-n partial sum; omega is the Monte
    Carlo measure of the arc from the arena center.  A_n and s0 are
    evaluated on the plain (uncorrected) partial sum: against any probe
    of a strictly later stage its graph misses the probe's zero set, so
    both numbers are finite and the inequality is a genuine test of the
    measure and maximization pipeline; the underlying inequality is
    exact, so with the one-sided bounds here a correct pipeline passes
    and a failure means a bug.  The probe stage must exceed n: at equal
    stages A_n is identically -infinity and the bound degenerates.
    """
    m = probe.stage
    if m <= n:
        raise ProbeError(
            f"probe stage {m} must exceed the evaluation stage {n}: the "
            f"partial sum lies on the probe's own zero set and A_n "
            f"degenerates to -infinity"
        )
    if not w_bound > 0:
        raise ProbeError(f"w bound must be positive, got {w_bound}")
    if rounds < 1 or grid < 8:
        raise ProbeError("need at least one refinement round and an "
                         "8-point grid")
    if arc.n0 != schedule.n0:
        raise ProbeError(
            f"arc order {arc.n0} does not match the schedule order "
            f"{schedule.n0}"
        )
    count = _partial_count(series, n)
    if count > len(schedule.poles):
        raise ProbeError(
            f"stage {n} clears {count} poles but the schedule certifies "
            f"{len(schedule.poles)}"
        )

    domain, holes_meta = build_arena(schedule, count, rotated=False,
                                     hole_floor=hole_floor)
    omega = estimate(domain, 0j, OuterArc(arc.k0, arc.n0), cfg)

    center = complex(at)
    rho = schedule.arena_rho
    alpha = float(probe.weight)

    pair = make_probe(series, n, weight=Fraction(1), anchored=False, at=at)
    num = _poly_sub(_poly_mul(probe.denominator, pair.numerator),
                    _poly_mul(probe.numerator, pair.denominator))
    if not any(c != 0 for c in num):
        raise ProbeError(
            "probe and partial sum define the same graph; nothing to test"
        )

    c2_log, c2_found_log, c2_meta = _product_sup(
        probe.numerator, probe.denominator, center, rho, w_bound,
        rounds, grid,
    )
    a_log, a_found_log, a_meta = _arc_sup(
        num, pair.denominator, center, rho, arc, rounds, grid,
    )

    s0_log = _log_abs_eval(num, at if isinstance(at, Rational) else center) \
        - _log_abs_eval(pair.denominator,
                        at if isinstance(at, Rational) else center)
    if s0_log == -_INF:
        raise ProbeError(
            "the evaluation point lies on the probe's zero set; "
            "s_n(0) is -infinity and the check degenerates"
        )

    c2 = alpha * c2_log
    a_n = alpha * a_log
    s0 = alpha * s0_log
    spread = c2 - a_n
    implied = c2 - omega.value * spread
    slack = 3.0 * omega.stderr * spread
    passed = s0 <= implied + slack
    payload = {
        "rho": rho,
        "arc": {"k0": arc.k0, "n0": arc.n0},
        "holes": len(holes_meta),
        "holes_enlarged": sum(1 for h in holes_meta if h["enlarged"]),
        "hole_floor": hole_floor,
        "at": center,
        "anchored_probe": probe.anchored,
        "poles_cut": count,
        "c2_grid": c2_meta,
        "a_grid": a_meta,
    }
    return TwoConstantReport(
        stage=n, probe_stage=m, c2=c2, a_n=a_n, s0=s0, omega=omega,
        implied=implied, slack=slack, passed=passed,
        w_bound=float(w_bound), c2_found=alpha * c2_found_log,
        a_found=alpha * a_found_log, payload=payload,
    )


# ---------------------------------------------------------------------------
# decay evidence


@dataclass(frozen=True)
class EvidenceRow:
    stage: int
    degree: int
    weight: float
    value: float
    exact_zero: bool


@dataclass(frozen=True)
class EvidenceTable:
    """Probe values at the evaluation point, one row per probe stage.

    value is weight * log|Q_m f - P_m| at the point: the residual of
    the full stored series against the stage-m plain partial sum.  An
    exact_zero row means the residual vanishes identically (the probe
    cleared every stored term), reported symbolically as -infinity
    rather than through float rounding.
    """

    rows: tuple
    at: complex
    series_kind: str

    def values(self) -> tuple:
        return tuple(r.value for r in self.rows)

    def csv_text(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["probe_stage", "degree", "weight", "value",
                         "exact_zero"])
        for r in self.rows:
            val = "-inf" if r.value == -_INF else format(r.value, ".12g")
            writer.writerow([r.stage, r.degree, format(r.weight, ".12g"),
                             val, int(r.exact_zero)])
        return buf.getvalue()

    def svg_text(self) -> str:
        finite = [(r.stage, r.value) for r in self.rows
                  if r.value != -_INF]
        floors = [r.stage for r in self.rows if r.value == -_INF]
        return svgplot.line_chart(
            finite, floor_markers=floors,
            title="probe decay at the evaluation point (evidence only)",
            x_label="probe stage", y_label="weight * log residual",
        )

    def to_dict(self) -> dict:
        return {
            "kind": "hull_evidence",
            "at": self.at,
            "series_kind": self.series_kind,
            "note": EVIDENCE_NOTE,
            "rows": [
                {
                    "probe_stage": r.stage,
                    "degree": r.degree,
                    "weight": r.weight,
                    "value": None if r.value == -_INF else r.value,
                    "exact_zero": r.exact_zero,
                }
                for r in self.rows
            ],
        }


def _tail_log_terms(series, stage: int, at) -> list:
    """(log magnitude, unit phase) of every stored term past the stage."""
    _stage_factors(series, stage, at)
    out = []
    if isinstance(series, LacunarySeries):
        for j in range(stage + 1, series.stages + 1):
            eps = series.epsilons[j]
            denom = _ring_denominator(series, j, at)
            mag = _log_abs(eps) - _log_abs(denom)
            if isinstance(denom, Rational):
                phase = complex(1.0 if denom > 0 else -1.0)
            else:
                phase = 1.0 / (denom / abs(denom))
            out.append((mag, phase))
        return out
    z0 = complex(at)
    for j in range(stage, len(series)):
        c = series.coefficient(j)
        denom = z0 - series.poles[j]
        mag = _log_abs(c) - _log_abs(denom)
        phase = (c / abs(c)) / (denom / abs(denom))
        out.append((mag, phase))
    return out


def _log_abs_sum(terms: Sequence) -> float:
    """log|sum of terms| from (log magnitude, unit phase) pairs."""
    top = max(mag for mag, _ in terms)
    if top == -_INF:
        return -_INF
    acc = 0j
    for mag, phase in terms:
        acc += phase * math.exp(mag - top)
    if abs(acc) == 0.0:
        return -_INF
    return top + math.log(abs(acc))


def hull_evidence(series, stages: Sequence, *, at=0, csv_path=None,
                  svg_path=None) -> EvidenceTable:
    """Probe decay h_m(at, f(at)) over the requested probe stages.

    Each probe is the plain partial sum with weight 1/deg(Q_m), so the
    residual at the point is Q_m(at) times the tail of the series past
    stage m, computed term by term in log space: no catastrophic
    cancellation, no float underflow, and an empty tail is reported as
    an exact symbolic -infinity.  Optionally emits the table as CSV and
    as an SVG decay chart.  The numbers are evidence of decay toward
    the hull point, never a membership proof.
    """
    rows = []
    for m in stages:
        probe = make_probe(series, m, anchored=False, at=at)
        terms = _tail_log_terms(series, m, at)
        if not terms:
            exact = not (isinstance(series, PoleSeries)
                         and series.tail_abs > 0)
            if exact:
                value = -_INF
            else:
                gap = series.tail_modulus - abs(complex(at))
                if gap <= 0:
                    raise ProbeError(
                        f"evaluation point {at!r} reaches the declared "
                        f"tail pole region"
                    )
                value = float(probe.weight) * (
                    _log_abs_eval(probe.denominator, at)
                    + float(_log_abs(series.tail_abs)) - math.log(gap)
                )
            rows.append(EvidenceRow(
                stage=m, degree=probe.degree,
                weight=float(probe.weight), value=value,
                exact_zero=exact,
            ))
            continue
        log_q = _log_abs_eval(probe.denominator, at)
        value = float(probe.weight) * (log_q + _log_abs_sum(terms))
        rows.append(EvidenceRow(
            stage=m, degree=probe.degree, weight=float(probe.weight),
            value=value, exact_zero=False,
        ))
    table = EvidenceTable(
        rows=tuple(rows), at=complex(at),
        series_kind=type(series).__name__,
    )
    if csv_path is not None:
        with open(csv_path, "w", encoding="ascii", newline="\n") as fh:
            fh.write(table.csv_text())
    if svg_path is not None:
        with open(svg_path, "w", encoding="ascii", newline="\n") as fh:
            fh.write(table.svg_text())
    return table

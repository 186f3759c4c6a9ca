"""Pole-series evaluation and exact Taylor-coefficient analysis.

Two series shapes live here.  PoleSeries is the generic sum of simple
poles c_j/(z - a_j) with exact rational coefficient components and
optional declared tail bounds for the ideal infinite object it stands
in for.  LacunarySeries is the stacked-ring sum eps_j/(r_j^{2^j} -
z^{2^j}) with r_j = (j+2)/(j+1); all of its Taylor data is rational,
and every strict inequality about coefficients (witnesses, smoothness
constants) is decided in Fraction arithmetic, never floats.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from numbers import Rational
from typing import Optional

from .certificates import Certificate
from .geometry import Lemma1Data

__all__ = [
    "SeriesError",
    "PoleSeries",
    "LacunarySeries",
    "EvalResult",
    "TaylorWitness",
    "SmoothnessCertificate",
    "ring_radius",
    "eval_f",
    "eval_fn",
    "lacunary_coefficient",
    "coefficient_table",
    "radius_witness",
    "smoothness_constants",
    "lemma1_liminf_check",
    "pole_approach",
]

# relative pole-proximity guard for float evaluation; conditioning, not
# correctness: exact paths never use it
POLE_GUARD = 1e-12

DEFAULT_WITNESS_SPAN = 1 << 20


class SeriesError(ValueError):
    """Raised for invalid series data, unreachable tolerances, bad stages."""


def ring_radius(j: int) -> Fraction:
    """Ring radius (j+2)/(j+1): strictly decreasing to 1."""
    if j < 0:
        raise SeriesError(f"ring index must be nonnegative, got {j}")
    return Fraction(j + 2, j + 1)


def _rational_pair(c) -> tuple:
    """Coefficient as exact (re, im) Fractions; floats convert exactly."""
    if isinstance(c, tuple):
        re, im = c
        return (Fraction(re), Fraction(im))
    if isinstance(c, Rational):
        return (Fraction(c), Fraction(0))
    if isinstance(c, float):
        return (Fraction(c), Fraction(0))
    if isinstance(c, complex):
        return (Fraction(c.real), Fraction(c.imag))
    raise SeriesError(f"coefficient {c!r} is not rational, float, or complex")


@dataclass(frozen=True)
class PoleSeries:
    """Finite list of simple poles with exact rational coefficients.

    The declared tails bound what the infinite continuation contributes:
    tail_abs bounds the sum of |c_j| beyond the list, tail_over_pole the
    sum of |c_j/a_j|, and tail_modulus is a lower bound on the modulus
    of every tail pole (so dist(z, tail poles) >= tail_modulus - |z|).
    All three default to the pure finite series.
    """

    poles: tuple
    coefficients: tuple
    tail_abs: Fraction = Fraction(0)
    tail_over_pole: Fraction = Fraction(0)
    tail_modulus: float = math.inf

    def __post_init__(self) -> None:
        if len(self.poles) != len(self.coefficients):
            raise SeriesError(
                f"{len(self.poles)} poles but {len(self.coefficients)} "
                f"coefficients"
            )
        object.__setattr__(self, "poles",
                           tuple(complex(a) for a in self.poles))
        object.__setattr__(
            self, "coefficients",
            tuple(_rational_pair(c) for c in self.coefficients),
        )
        for a in self.poles:
            if a == 0:
                raise SeriesError("pole at 0 breaks the a_j corrections")
        tails = (Fraction(self.tail_abs), Fraction(self.tail_over_pole))
        object.__setattr__(self, "tail_abs", tails[0])
        object.__setattr__(self, "tail_over_pole", tails[1])
        if tails[0] < 0 or tails[1] < 0:
            raise SeriesError("tail bounds must be nonnegative")
        if tails[0] > 0 and not 0 < self.tail_modulus < math.inf:
            raise SeriesError(
                "a declared tail needs a finite positive tail_modulus"
            )

    def __len__(self) -> int:
        return len(self.poles)

    def coefficient(self, j: int) -> complex:
        re, im = self.coefficients[j]
        return complex(re, im)

    def coefficient_abs_sq(self, j: int) -> Fraction:
        re, im = self.coefficients[j]
        return re * re + im * im

    def coefficient_abs_upper(self, j: int) -> Fraction:
        """|c_j| <= |re| + |im|, exact."""
        re, im = self.coefficients[j]
        return abs(re) + abs(im)

    def absolute_sum(self) -> float:
        """Sum of |c_j| plus the declared tail: the summability bound."""
        return sum(abs(self.coefficient(j)) for j in range(len(self))) + \
            float(self.tail_abs)

    def absolute_over_pole_sum(self) -> float:
        """Sum of |c_j/a_j| plus tail: convergence of the corrections."""
        return sum(
            abs(self.coefficient(j)) / abs(self.poles[j])
            for j in range(len(self))
        ) + float(self.tail_over_pole)

    def cap_violations(self, caps) -> tuple:
        """Indices with |c_j| > caps[j], decided on exact squares."""
        bad = []
        for j in range(min(len(self), len(caps))):
            cap = Fraction(caps[j])
            if self.coefficient_abs_sq(j) > cap * cap:
                bad.append(j)
        return tuple(bad)


@dataclass(frozen=True)
class LacunarySeries:
    """Sum over stages j of eps_j/(r_j^{2^j} - z^{2^j}), r_j = (j+2)/(j+1)."""

    epsilons: tuple

    def __post_init__(self) -> None:
        if not self.epsilons:
            raise SeriesError("a lacunary series needs at least one stage")
        eps = tuple(Fraction(e) for e in self.epsilons)
        object.__setattr__(self, "epsilons", eps)
        for j, e in enumerate(eps):
            if e <= 0:
                raise SeriesError(f"stage {j} weight must be positive: {e}")

    @property
    def stages(self) -> int:
        """Largest stage index J; stages run 0..J."""
        return len(self.epsilons) - 1

    def radius(self, j: int) -> Fraction:
        return ring_radius(j)

    def block(self, j: int) -> int:
        return 1 << j

    def value_exact(self, z) -> Fraction:
        """Exact evaluation at a rational point off the poles."""
        q = Fraction(z)
        total = Fraction(0)
        for j, eps in enumerate(self.epsilons):
            m = self.block(j)
            den = self.radius(j) ** m - q ** m
            if den == 0:
                raise SeriesError(f"z={q} is a stage-{j} pole")
            total += eps / den
        return total

    def value(self, z: complex) -> complex:
        """Float evaluation with a relative pole-proximity guard."""
        z = complex(z)
        total = 0j
        for j, eps in enumerate(self.epsilons):
            m = self.block(j)
            rm = float(self.radius(j)) ** m
            den = rm - z**m
            if abs(den) <= POLE_GUARD * rm:
                raise SeriesError(
                    f"z={z} within the evaluation guard of a stage-{j} pole"
                )
            total += float(eps) / den
        return total


@dataclass(frozen=True)
class EvalResult:
    value: complex
    error_bound: float
    terms_used: int
    exact: Optional[Fraction] = None


def eval_f(series, z, tol: float) -> EvalResult:
    """Evaluate the series with a certified bound on what was left out.

    For a PoleSeries the left-out part is the declared tail, bounded by
    tail_abs/(tail_modulus - |z|); the call fails when that bound cannot
    be brought under tol.  A LacunarySeries is a finite closed-form sum:
    rational z evaluates exactly (bound 0), complex z in floats.
    """
    if not tol > 0:
        raise SeriesError(f"tolerance must be positive, got {tol}")
    if isinstance(series, LacunarySeries):
        if isinstance(z, Rational) and not isinstance(z, float):
            exact = series.value_exact(z)
            return EvalResult(value=complex(exact), error_bound=0.0,
                              terms_used=len(series.epsilons), exact=exact)
        return EvalResult(value=series.value(z), error_bound=0.0,
                          terms_used=len(series.epsilons))
    if not isinstance(series, PoleSeries):
        raise SeriesError(f"cannot evaluate {type(series).__name__}")

    z = complex(z)
    total = 0j
    for j in range(len(series)):
        a = series.poles[j]
        d = z - a
        if abs(d) <= POLE_GUARD * max(1.0, abs(a)):
            raise SeriesError(f"z={z} within the evaluation guard of pole {j}")
        total += series.coefficient(j) / d
    bound = 0.0
    if series.tail_abs > 0:
        gap = series.tail_modulus - abs(z)
        if gap <= 0:
            raise SeriesError(
                f"|z|={abs(z)} reaches the tail pole region at modulus "
                f"{series.tail_modulus}"
            )
        bound = float(series.tail_abs) / gap
        if bound > tol:
            raise SeriesError(
                f"tail bound {bound} exceeds tolerance {tol}; "
                f"not achievable with the available terms"
            )
    return EvalResult(value=total, error_bound=bound, terms_used=len(series))


def eval_fn(series: PoleSeries, n: int, z, cap: Optional[float] = None,
            domain=None) -> complex:
    """Regularized partial sum: n pole terms minus the remaining c_j/a_j.

    The value omits the declared beyond-list correction tail, which is
    bounded by series.tail_over_pole.  With cap given (and z inside
    domain, when one is given), a value above cap raises: the partial
    sums were promised to stay bounded there, so exceeding the cap
    means the schedule feeding this series is wrong.
    """
    if not 0 <= n <= len(series):
        raise SeriesError(f"stage {n} outside 0..{len(series)}")
    z = complex(z)
    total = 0j
    for j in range(n):
        a = series.poles[j]
        d = z - a
        if abs(d) <= POLE_GUARD * max(1.0, abs(a)):
            raise SeriesError(f"z={z} within the evaluation guard of pole {j}")
        total += series.coefficient(j) / d
    for j in range(n, len(series)):
        total -= series.coefficient(j) / series.poles[j]
    if cap is not None and (domain is None or domain.contains(z)):
        slack = float(series.tail_over_pole)
        if abs(total) + slack > cap:
            raise SeriesError(
                f"schedule violation: |f_{n}({z})| = {abs(total)} exceeds "
                f"the cap {cap}"
            )
    return total


# ---------------------------------------------------------------------------
# exact Taylor coefficients


def _validate_stage(series: LacunarySeries, stage: Optional[int]) -> int:
    if stage is None:
        return series.stages
    if not 0 <= stage <= series.stages:
        raise SeriesError(f"stage {stage} outside 0..{series.stages}")
    return stage


def lacunary_coefficient(series: LacunarySeries, k: int,
                         stage: Optional[int] = None) -> Fraction:
    """Taylor coefficient d_k (or stage-restricted d_{n,k}) exactly.

    Geometric expansion of each stage: eps_j/(r_j^m - z^m) contributes
    eps_j * r_j^-(k+m) to every k divisible by m = 2^j.
    """
    if k < 0:
        raise SeriesError(f"coefficient index must be nonnegative, got {k}")
    n = _validate_stage(series, stage)
    total = Fraction(0)
    for j in range(n + 1):
        m = series.block(j)
        if k % m == 0:
            total += series.epsilons[j] * series.radius(j) ** -(k + m)
    return total


def coefficient_table(series: LacunarySeries, upto: int,
                      stage: Optional[int] = None) -> tuple:
    """Coefficients d_0..d_upto by dense power-series long division.

    Independent of the divisor-sum route: each stage's reciprocal of
    (r^m - z^m) is computed by the generic linear recurrence for 1/D(z)
    with a dense divisor, then scaled and accumulated.  Exists so the
    two code paths can be compared bit for bit.
    """
    if upto < 0:
        raise SeriesError(f"table size must be nonnegative, got {upto}")
    n = _validate_stage(series, stage)
    table = [Fraction(0)] * (upto + 1)
    for j in range(n + 1):
        m = series.block(j)
        divisor = [Fraction(0)] * (min(m, upto + 1))
        divisor[0] = series.radius(j) ** m
        if m <= upto:
            divisor += [Fraction(0)] * (upto + 1 - len(divisor))
            divisor[m] = Fraction(-1)
        recip = [Fraction(0)] * (upto + 1)
        recip[0] = 1 / divisor[0]
        for t in range(1, upto + 1):
            acc = Fraction(0)
            for s in range(1, t + 1):
                if divisor[s]:
                    acc += divisor[s] * recip[t - s]
            recip[t] = -acc / divisor[0]
        eps = series.epsilons[j]
        for t in range(upto + 1):
            table[t] += eps * recip[t]
    return tuple(table)


class _PowerScan:
    """Incremental r_j^-(k+2^j) and threshold powers for k = 1, 2, ..."""

    def __init__(self, series: LacunarySeries, stage: int):
        self.series = series
        self.stage = stage
        self.inv = [1 / series.radius(j) for j in range(stage + 1)]
        # at k=1 the j-term power is r_j^-(1+2^j)
        self.powers = [
            self.inv[j] ** (1 + series.block(j)) for j in range(stage + 1)
        ]
        self.k = 1

    def coefficient(self) -> Fraction:
        total = Fraction(0)
        for j in range(self.stage + 1):
            if self.k % self.series.block(j) == 0:
                total += self.series.epsilons[j] * self.powers[j]
        return total

    def advance(self) -> None:
        for j in range(self.stage + 1):
            self.powers[j] *= self.inv[j]
        self.k += 1


@dataclass(frozen=True)
class TaylorWitness:
    """Index where a stage's coefficient beats a threshold radius exactly."""

    stage: int
    index: int
    coefficient: Fraction
    threshold: Fraction
    margin: Fraction

    def root_value(self) -> float:
        """|d|^(1/k), the liminf-style growth reading of the witness."""
        return float(self.coefficient) ** (1.0 / self.index)


def default_witness_threshold(stage: int) -> Fraction:
    """r_{n-1} for later stages; the first stage tests against r_0 + 1."""
    if stage == 0:
        return ring_radius(0) + 1
    return ring_radius(stage - 1)


def radius_witness(series: LacunarySeries, stage: int,
                   threshold=None,
                   k_max: int = DEFAULT_WITNESS_SPAN) -> TaylorWitness:
    """Smallest k <= k_max with d_{n,k} > threshold^-k, decided exactly.

    The threshold must sit strictly above the stage radius r_n, where
    the root growth of d_{n,k} accumulates, so witnesses exist for
    every large enough scan span.
    """
    n = _validate_stage(series, stage)
    rho = default_witness_threshold(n) if threshold is None \
        else Fraction(threshold)
    if rho <= series.radius(n):
        raise SeriesError(
            f"threshold {rho} not above the stage radius {series.radius(n)}; "
            f"coefficients decay too fast for a witness"
        )
    if k_max < 1:
        raise SeriesError(f"k_max must be positive, got {k_max}")
    scan = _PowerScan(series, n)
    thr = 1 / rho
    best_ratio = Fraction(0)
    while scan.k <= k_max:
        d = scan.coefficient()
        if d > thr:
            return TaylorWitness(stage=n, index=scan.k, coefficient=d,
                                 threshold=rho, margin=d - thr)
        best_ratio = max(best_ratio, d / thr)
        scan.advance()
        thr *= 1 / rho
    raise SeriesError(
        f"no witness for stage {n} against threshold {rho} below k_max="
        f"{k_max}; largest ratio observed {float(best_ratio)}"
    )


@dataclass(frozen=True)
class SmoothnessCertificate:
    """C_l with |d_k| k^l <= C_l for all k >= 1, exact plus Cauchy tail.

    Indices up to k_max carry the exact scan (argmax per order in
    attained_at); beyond k_max the bound M(r') r'^-k covers the decay,
    with the decreasing-ratio check recorded per order.
    """

    order: int
    constants: tuple
    attained_at: tuple
    k_max: int
    scanned_upto: int
    r_prime: Fraction
    cauchy_m: Fraction
    valid: bool

    def to_dict(self) -> dict:
        return {
            "kind": "smoothness_constants",
            "order": self.order,
            "constants": list(self.constants),
            "attained_at": list(self.attained_at),
            "k_max": self.k_max,
            "scanned_upto": self.scanned_upto,
            "r_prime": self.r_prime,
            "cauchy_m": self.cauchy_m,
            "valid": self.valid,
        }


def smoothness_constants(series: LacunarySeries, order: int,
                         k_max: int) -> SmoothnessCertificate:
    """C_l = max_k |d_k| k^l over k <= k_max, certified for all k.

    The scan prunes once the envelope S r_J^-k k^l (S = d_0, r_J the
    smallest ring radius) provably stays under every running max: each
    skipped k <= k_max is then covered exactly.  Beyond k_max the
    certificate uses the sup bound M(r') on |z| = r' = (1 + r_J)/2 and
    the Cauchy estimate |d_k| <= M(r') r'^-k, checked at k_max + 1
    together with the ratio test that makes it decreasing from there.
    """
    if order < 0:
        raise SeriesError(f"order must be nonnegative, got {order}")
    big_block = series.block(series.stages)
    if k_max < big_block:
        raise SeriesError(
            f"k_max={k_max} below the largest block {big_block}; "
            f"the scan would miss the newest stage entirely"
        )
    r_small = series.radius(series.stages)
    envelope_scale = lacunary_coefficient(series, 0)  # d_0 bounds all stages

    best = [Fraction(0)] * (order + 1)
    arg = [0] * (order + 1)
    scan = _PowerScan(series, series.stages)
    env_power = 1 / r_small  # r_J^-k at the current k
    scanned = 0
    while scan.k <= k_max:
        k = scan.k
        d = scan.coefficient()
        kp = Fraction(1)
        for l in range(order + 1):
            v = d * kp
            if v > best[l]:
                best[l] = v
                arg[l] = k
            kp *= k
        scanned = k
        # prune: for k' > k the envelope S k'^l r_J^-k' bounds d_k' k'^l;
        # once it is decreasing and below every best, the rest of the
        # range is certified without visiting it
        if k < k_max:
            ratio_ok = Fraction(k + 2, k + 1) ** order <= r_small
            if ratio_ok:
                env_next = env_power * (1 / r_small)
                covered = all(
                    envelope_scale * Fraction(k + 1) ** l * env_next <= best[l]
                    for l in range(order + 1)
                )
                if covered:
                    break
        scan.advance()
        env_power *= 1 / r_small

    r_prime = (1 + r_small) / 2
    m_bound = Fraction(0)
    for j, eps in enumerate(series.epsilons):
        m = series.block(j)
        m_bound += eps / (series.radius(j) ** m - r_prime ** m)

    # tail: M r'^-k k^l <= C_l for all k > k_max; decided at k_max + 1
    # plus the exact ratio test that the left side decreases beyond it
    k1 = k_max + 1
    tail_head = m_bound * r_prime ** -k1
    shrinking = Fraction(k1 + 1, k1) ** order <= r_prime
    tail_ok = shrinking and all(
        tail_head * Fraction(k1) ** l <= best[l] for l in range(order + 1)
    )
    if not tail_ok:
        needed = max(
            k1,
            int(math.ceil(order / math.log(float(r_prime)))) + 1,
        )
        while Fraction(needed + 1, needed) ** order > r_prime:
            needed *= 2
        raise SeriesError(
            f"Cauchy tail does not close under the scanned constants at "
            f"k_max={k_max}; enlarge the scan to at least {needed}"
        )
    return SmoothnessCertificate(
        order=order,
        constants=tuple(best),
        attained_at=tuple(arg),
        k_max=k_max,
        scanned_upto=scanned,
        r_prime=r_prime,
        cauchy_m=m_bound,
        valid=True,
    )


# ---------------------------------------------------------------------------
# boundary-behavior checks


def lemma1_liminf_check(series: PoleSeries, data: Lemma1Data, n: int,
                        n_samples: int = 64) -> Certificate:
    """Sampled check that (z - a_n) f(z) stays near c_n along B_n.

    Since f - c_n/(z - a_n) is bounded by S_n = sum_{j != n} |c_j| /
    eps[n][j] on the segment, |(z - a_n) f(z)| >= |c_n| - |z - a_n| S_n,
    which stays above |c_n|/2 within delta_n = |c_n|/(2 S_n) of the
    endpoint.  Samples that dip under the analytic floor expose a wrong
    separation matrix and raise instead of certifying.
    """
    if not 0 <= n < len(series):
        raise SeriesError(f"pole index {n} outside 0..{len(series) - 1}")
    if len(series) != len(data.poles):
        raise SeriesError(
            f"series has {len(series)} poles but the layout has "
            f"{len(data.poles)}"
        )
    if n_samples < 1:
        raise SeriesError("need at least one sample")
    if series.coefficient_abs_sq(n) == 0:
        raise SeriesError(
            f"coefficient {n} vanishes; the liminf floor needs 0 < |c_n|"
        )
    c_n = series.coefficient(n)
    abs_cn = abs(c_n)
    spread = 0.0
    for j in range(len(series)):
        if j == n:
            continue
        cj = abs(series.coefficient(j))
        if cj == 0:
            continue
        sep = data.eps[n][j]
        if not sep > 0:
            raise SeriesError(
                f"separation eps[{n}][{j}] is not positive; pole {j} "
                f"touches segment {n}"
            )
        spread += cj / sep

    seed, endpoint = data.segment(n)
    seg_len = abs(endpoint - seed)
    if seg_len == 0:
        raise SeriesError(f"segment {n} is degenerate; nothing to sample")
    delta = seg_len if spread == 0 else min(abs_cn / (2.0 * spread), seg_len)
    direction = (seed - endpoint) / seg_len

    floor = abs_cn / 2.0
    sampled_min = math.inf
    worst_gap = math.inf
    for i in range(1, n_samples + 1):
        dist = delta * i / n_samples
        z = endpoint + direction * dist
        rest = 0j
        for j in range(len(series)):
            if j != n:
                rest += series.coefficient(j) / (z - series.poles[j])
        v = abs(c_n + (z - endpoint) * rest)
        analytic = abs_cn - dist * spread
        if v < analytic - 1e-9 * abs_cn:
            raise SeriesError(
                f"sample at distance {dist} undercuts the analytic floor: "
                f"{v} < {analytic}; the separation matrix is wrong"
            )
        sampled_min = min(sampled_min, v)
        worst_gap = min(worst_gap, v - analytic)
    valid = sampled_min >= floor
    return Certificate(
        kind="liminf_floor",
        valid=valid,
        bound=floor,
        value=sampled_min,
        margin=sampled_min - floor,
        method="segment samples of |(z - a_n) f(z)| against the exact "
               "triangle-inequality floor |c_n| - |z - a_n| S_n",
        inputs={"pole": n, "delta": delta, "spread": spread,
                "samples": n_samples},
        payload={"segment": {"from": endpoint, "toward": seed},
                 "floor_gap": worst_gap},
    )


def pole_approach(series: LacunarySeries, ring: int, slot: int,
                  exponents) -> tuple:
    """Radial samples toward the ring pole r_j e^(2 pi i slot / 2^j).

    Returns (m, z, |f(z)|) triples for z = (1 - 2^-m) at the pole's ray.
    A simple pole doubles |f| per halved distance, which the growth
    tests read off these rows.
    """
    if not 0 <= ring <= series.stages:
        raise SeriesError(f"ring {ring} outside 0..{series.stages}")
    block = series.block(ring)
    if not 0 <= slot < block:
        raise SeriesError(f"slot {slot} outside 0..{block - 1}")
    direction = complex(
        math.cos(2.0 * math.pi * slot / block),
        math.sin(2.0 * math.pi * slot / block),
    )
    radius = float(series.radius(ring))
    rows = []
    for m in exponents:
        if m < 1:
            raise SeriesError(f"approach exponent must be positive, got {m}")
        z = (1.0 - math.ldexp(1.0, -m)) * radius * direction
        rows.append((m, z, abs(series.value(z))))
    return tuple(rows)

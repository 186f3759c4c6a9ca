"""Potential construction, radius schedules, thinness certificates.

The frozen exponents below were derived by hand from the closed-form
disc bound before the search code existed:

  single pole a=2, working radius 1: M = 6, lam = 1/(2 ln 3); largest
  dyadic rho with lam*log(rho/6) <= -1 is rho = 1/2 (true cutoff 2/3).

  poles +-2, n0 = 2: lam = (1/(3 ln 3), 1/(6 ln 3)); the copy at -2 of
  either pole carries the smaller weight and needs 2^-6 (bound -1.0246
  at m=6, -0.9183 at m=5).
"""

import cmath
import math
import random

import pytest

from hullforge.geometry import orbit_centers, rotate, theorem2_positions
from hullforge.thinness import (
    LogPotential,
    RadiiSchedule,
    ThinnessError,
    build_potential,
    choose_disc_radii,
    dyadic,
    verify_thinness,
)

TOL = 1e-12
ANCHOR = cmath.exp(1j * math.pi / 4)

mp = pytest.importorskip("mpmath")


def single_pole_potential():
    return build_potential([2 + 0j], working_radius=1.0)


def pair_potential():
    return build_potential([2 + 0j, -2 + 0j], working_radius=1.0)


# ---------------------------------------------------------------------------
# build_potential


def test_single_pole_normalization():
    pot = single_pole_potential()
    assert pot.scale == 6.0
    assert pot.offset == 0.0
    assert pot.weights[0] == pytest.approx(1.0 / (2.0 * math.log(3.0)), abs=TOL)
    assert pot.origin_value() == pytest.approx(-0.5, abs=TOL)


def test_single_pole_both_modes_agree():
    g = build_potential([2 + 0j], 1.0, weight_mode="geometric")
    u = build_potential([2 + 0j], 1.0, weight_mode="uniform")
    assert g.weights == pytest.approx(u.weights, abs=TOL)


def test_pair_weights_geometric_ratio():
    pot = pair_potential()
    # equal moduli, so the geometric mode halves the weight per index
    assert pot.weights[0] == pytest.approx(1.0 / (3.0 * math.log(3.0)), abs=TOL)
    assert pot.weights[1] == pytest.approx(1.0 / (6.0 * math.log(3.0)), abs=TOL)
    assert pot.origin_value() == pytest.approx(-0.5, abs=TOL)


def test_uniform_mode_equal_weights_for_equal_moduli():
    pot = build_potential([2 + 0j, -2 + 0j], 1.0, weight_mode="uniform")
    assert pot.weights[0] == pytest.approx(pot.weights[1], abs=TOL)


def test_ring_poles_origin_value_high_precision():
    # float origin sum re-checked by a 50-digit summation of the same weights
    pot = build_potential(theorem2_positions(2), working_radius=0.5)
    mp.mp.dps = 50
    total = mp.mpf(0)
    for c, lam in zip(pot.centers, pot.weights):
        total += mp.mpf(lam) * mp.log(abs(mp.mpc(c)) / mp.mpf(pot.scale))
    assert abs(float(total) - (-0.5)) <= 1e-13
    assert abs(pot.origin_value() - float(total)) <= 1e-13


def test_potential_is_minus_inf_at_centers():
    pot = single_pole_potential()
    assert pot.value(2 + 0j) == -math.inf


def test_build_potential_rejections():
    with pytest.raises(ThinnessError):
        build_potential([], 1.0)
    with pytest.raises(ThinnessError):
        build_potential([0j], 1.0)
    with pytest.raises(ThinnessError):
        build_potential([2 + 0j], 1.0, weight_mode="harmonic")
    with pytest.raises(ThinnessError):
        build_potential([2 + 0j], 1.0, origin_value=0.5)
    with pytest.raises(ThinnessError):
        build_potential([complex(math.inf, 0)], 1.0)


# ---------------------------------------------------------------------------
# dyadic view


def test_dyadic_view():
    assert dyadic(1) == 0.5
    assert dyadic(1074) == 5e-324
    assert dyadic(1075) == 0.0
    assert dyadic(4096) == 0.0


# ---------------------------------------------------------------------------
# choose_disc_radii


def test_single_pole_radius_frozen():
    pot = single_pole_potential()
    sched = choose_disc_radii(pot, [2 + 0j], n0=1, rho=1.0)
    assert sched.exponents == (1,)
    # sampled check: u <= -1 on the disc boundary
    worst = max(
        pot.value(2 + 0.5 * cmath.exp(2j * math.pi * i / 1000))
        for i in range(1000)
    )
    assert worst <= -1.0
    # maximality: one dyadic step up already fails the level
    too_big = max(
        pot.value(2 + 1.0 * cmath.exp(2j * math.pi * i / 1000))
        for i in range(1000)
    )
    assert too_big > -1.0


def test_pair_radii_frozen():
    pot = pair_potential()
    sched = choose_disc_radii(pot, [2 + 0j, -2 + 0j], n0=2, rho=1.0)
    assert sched.exponents == (6, 6)
    # the rotated copies coincide with the pole pair: 2 merged holes
    holes = sched.orbit_holes()
    assert len(holes) == 2
    assert {m for _, m in holes} == {6}
    # disjointness keeps every radius finite and small
    assert all(r < 2.0 for r in sched.radii())
    # sampled maximality at the weak copy: 2^-5 would break the level
    worst = max(
        pot.value(-2 + dyadic(5) * cmath.exp(2j * math.pi * i / 1000))
        for i in range(1000)
    )
    assert worst > -1.0
    ok = max(
        pot.value(-2 + dyadic(6) * cmath.exp(2j * math.pi * i / 1000))
        for i in range(1000)
    )
    assert ok <= -1.0


def test_small_pole_honors_half_modulus_cap():
    pot = build_potential([0.01 + 0j], working_radius=1.0)
    sched = choose_disc_radii(pot, [0.01 + 0j], n0=1, rho=1.0)
    assert sched.exponents == (15,)
    assert sched.radii()[0] <= 0.005


def test_orbit_pipeline_schedule_magnitudes():
    # translated ring poles, quarter-turn orbit: the arena the estimator
    # sweeps use; weights are small so radii collapse to dyadic dust
    poles = [z - ANCHOR for z in theorem2_positions(2)]
    centers, _ = orbit_centers(poles, 4)
    pot = build_potential(centers, working_radius=5.0 / 12.0,
                          weight_mode="uniform")
    sched = choose_disc_radii(pot, poles[:3], n0=4, rho=5.0 / 12.0)
    assert len(sched.exponents) == 3
    assert all(50 <= m <= 2000 for m in sched.exponents)
    cert = verify_thinness(pot, sched)
    assert cert.valid, cert.failures


def test_choose_rejections():
    pot = single_pole_potential()
    with pytest.raises(ThinnessError):
        choose_disc_radii(pot, [2 + 0j], n0=1, rho=2.0)  # pole on the circle
    with pytest.raises(ThinnessError):
        choose_disc_radii(pot, [2 + 0j], n0=1, rho=1.0, count=5)
    with pytest.raises(ThinnessError):
        choose_disc_radii(pot, [2 + 0j], n0=0, rho=1.0)


def test_missing_orbit_center_is_an_error():
    # potential over the raw pole only, but n0=4 copies need centers too
    pot = single_pole_potential()
    with pytest.raises(ThinnessError, match="no potential center"):
        choose_disc_radii(pot, [2 + 0j], n0=4, rho=1.0)


# ---------------------------------------------------------------------------
# verify_thinness


def test_verify_composed_schedule_valid():
    pot = pair_potential()
    sched = choose_disc_radii(pot, [2 + 0j, -2 + 0j], n0=2, rho=1.0)
    cert = verify_thinness(pot, sched)
    assert cert.valid
    assert cert.failures == ()
    assert cert.origin_value == pytest.approx(-0.5, abs=TOL)
    assert cert.margin() > 0
    assert len(cert.disc_bounds) == 4  # 2 poles x 2 copies
    assert all(b <= -1.0 for _, _, b in cert.disc_bounds)


def test_verify_flags_inflated_radius():
    pot = pair_potential()
    sched = choose_disc_radii(pot, [2 + 0j, -2 + 0j], n0=2, rho=1.0)
    bad = RadiiSchedule(
        poles=sched.poles,
        exponents=(sched.exponents[0] - 2,) + sched.exponents[1:],
        n0=sched.n0,
        arena_rho=sched.arena_rho,
        verified=sched.verified,
    )
    cert = verify_thinness(pot, bad)
    assert not cert.valid
    offending = {n for n, _, _ in cert.failures}
    assert offending == {0}
    assert any("disc bound" in reason for _, _, reason in cert.failures)


def test_verify_flags_out_of_range_radius():
    pot = single_pole_potential()
    bad = RadiiSchedule(poles=(2 + 0j,), exponents=(-1,), n0=1,
                        arena_rho=1.0, verified=(True,))
    cert = verify_thinness(pot, bad)
    assert not cert.valid
    assert any("not below 1" in r for _, _, r in cert.failures)


def test_verify_empty_schedule_vacuous():
    pot = single_pole_potential()
    empty = RadiiSchedule(poles=(), exponents=(), n0=1, arena_rho=1.0,
                          verified=())
    cert = verify_thinness(pot, empty)
    assert cert.valid
    assert cert.disc_bounds == ()
    assert cert.origin_value == pytest.approx(-0.5, abs=TOL)


def test_verify_flags_broken_origin_pin():
    pot = single_pole_potential()
    skewed = LogPotential(centers=pot.centers, weights=pot.weights,
                          scale=pot.scale, offset=0.25)
    empty = RadiiSchedule(poles=(), exponents=(), n0=1, arena_rho=1.0,
                          verified=())
    cert = verify_thinness(skewed, empty)
    assert not cert.valid
    assert any("origin pin" in r for _, _, r in cert.failures)


def test_shrinking_radii_keeps_certificates_valid():
    pot = pair_potential()
    sched = choose_disc_radii(pot, [2 + 0j, -2 + 0j], n0=2, rho=1.0)
    rng = random.Random(11)
    for _ in range(25):
        bumped = tuple(m + rng.randrange(0, 6) for m in sched.exponents)
        shrunk = RadiiSchedule(poles=sched.poles, exponents=bumped,
                               n0=sched.n0, arena_rho=sched.arena_rho,
                               verified=sched.verified)
        assert verify_thinness(pot, shrunk).valid


# ---------------------------------------------------------------------------
# harmonicity spot check


def test_mean_value_property_away_from_centers():
    pot = build_potential(theorem2_positions(2), working_radius=0.5)
    rng = random.Random(3)
    h = 1.0 / 16.0
    checked = 0
    while checked < 100:
        z = complex(rng.uniform(-3, 3), rng.uniform(-3, 3))
        if min(abs(z - c) for c in pot.centers) < h + 0.05:
            continue
        mean = sum(
            pot.value(z + h * cmath.exp(2j * math.pi * i / 256))
            for i in range(256)
        ) / 256.0
        assert abs(pot.value(z) - mean) <= h * h
        checked += 1

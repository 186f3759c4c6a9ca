"""Walk-on-spheres estimates against closed-form and symmetry oracles.

The annulus formula log(|z|/r)/log(R/r) is the one non-trivial exact
value available, so it anchors the bias and tolerance tests; everything
else leans on symmetry (arcs of a hole-free disc), exact additivity of
the classification, and determinism of the chunked runs.
"""

import cmath
import json
import math
import random
from dataclasses import replace

import pytest

from hullforge.certificates import canonical_json
from hullforge.geometry import (
    Arc,
    Hole,
    PerforatedDisc,
    orbit_centers,
    theorem2_positions,
)
from hullforge.harmonic import (
    HOLE_FLOOR,
    HoleBoundaries,
    MeasureError,
    OuterArc,
    OuterCircle,
    WalkConfig,
    build_arena,
    estimate,
    exact_annulus,
    simulate,
    verify_arc_bound,
    verify_outer_bound,
)
from hullforge.thinness import (
    RadiiSchedule,
    build_potential,
    choose_disc_radii,
    verify_thinness,
)

ANCHOR = cmath.exp(1j * math.pi / 4)


def annulus_domain():
    return PerforatedDisc(1.0, (Hole(0j, 0.25),))


def cfg(n_walks=20000, seed=7, **kw):
    return WalkConfig(n_walks=n_walks, rng_seed=seed, **kw)


@pytest.fixture(scope="module")
def pipeline():
    """Ten-pole schedule in the quarter-turn arena, thinness certified."""
    poles = [z - ANCHOR for z in theorem2_positions(3)]
    centers, _ = orbit_centers(poles, 4)
    pot = build_potential(centers, working_radius=5.0 / 12.0,
                          weight_mode="uniform")
    sched = choose_disc_radii(pot, poles[:10], n0=4, rho=5.0 / 12.0)
    cert = verify_thinness(pot, sched)
    assert cert.valid
    return sched, cert


def blocked_ring_schedule():
    """Eight half-radius discs of 1/8 at distance 0.4 wall off the origin."""
    return RadiiSchedule(poles=(0.4 + 0j,), exponents=(2,), n0=8,
                         arena_rho=1.0, verified=(True,))


# ---------------------------------------------------------------------------
# configuration validation


def test_config_rejects_small_walk_counts():
    with pytest.raises(MeasureError, match="minimum 100"):
        WalkConfig(n_walks=99, rng_seed=1)
    with pytest.raises(MeasureError, match="minimum 100"):
        WalkConfig(n_walks=10, rng_seed=1)


def test_config_rejects_bad_absorption_distance():
    with pytest.raises(MeasureError):
        WalkConfig(n_walks=1000, rng_seed=1, eps_boundary=0.0)
    with pytest.raises(MeasureError):
        WalkConfig(n_walks=1000, rng_seed=1, eps_boundary=1.0)


def test_config_seed_is_mandatory():
    with pytest.raises(TypeError):
        WalkConfig(n_walks=1000)


def test_estimate_start_validation():
    dom = annulus_domain()
    with pytest.raises(MeasureError, match="outside"):
        estimate(dom, 2.0 + 0j, OuterCircle(), cfg())
    with pytest.raises(MeasureError, match="outside"):
        estimate(dom, 0.1 + 0j, OuterCircle(), cfg())  # inside the hole
    with pytest.raises(MeasureError, match="eps_boundary"):
        estimate(dom, 0.25 + 5e-7 + 0j, OuterCircle(), cfg())


def test_tiny_holes_need_tighter_absorption():
    dom = PerforatedDisc(1.0, (Hole(0.5 + 0j, 5e-6),))
    with pytest.raises(MeasureError, match="min hole"):
        simulate(dom, 0j, cfg())


# ---------------------------------------------------------------------------
# estimates against exact values


def test_hole_free_disc_absorbs_everything_outside():
    est = estimate(PerforatedDisc(1.0), 0j, OuterCircle(), cfg(1000, seed=1))
    assert est.value == 1.0
    assert est.stderr == 0.0
    assert est.lost == 0


def test_eighth_arc_by_rotational_symmetry():
    c = cfg()
    est = estimate(PerforatedDisc(1.0), 0j, OuterArc(0, 8), c)
    assert abs(est.value - 0.125) <= est.three_sigma() + 10 * c.eps_boundary


def test_annulus_matches_closed_form():
    c = cfg()
    est = estimate(annulus_domain(), 0.5 + 0j, OuterCircle(), c)
    exact = exact_annulus(0.5, 0.25, 1.0)
    assert exact == 0.5
    assert abs(est.value - exact) <= est.three_sigma() + 10 * c.eps_boundary


def test_exact_annulus_formula():
    assert exact_annulus(0.5, 0.25, 1.0) == 0.5
    r, big = 0.3, 1.7
    assert exact_annulus(math.sqrt(r * big), r, big) == pytest.approx(
        0.5, abs=1e-12
    )
    near_top = exact_annulus(big - 1e-9, r, big)
    assert near_top > 0.999
    for bad in [(0.2, 0.25, 1.0), (1.5, 0.25, 1.0), (0.5, 0.0, 1.0)]:
        with pytest.raises(MeasureError, match="need"):
            exact_annulus(*bad)


def test_annulus_oracle_suite_random_configs():
    rng = random.Random(2024)
    for _ in range(20):
        r_in = rng.uniform(0.05, 0.35)
        r_out = rng.uniform(0.75, 1.6)
        z_mod = r_in * (r_out / r_in) ** rng.uniform(0.25, 0.75)
        dom = PerforatedDisc(r_out, (Hole(0j, r_in),))
        c = cfg(n_walks=20000, seed=rng.randrange(2**32))
        est = estimate(dom, z_mod + 0j, OuterCircle(), c)
        exact = exact_annulus(z_mod, r_in, r_out)
        tol = est.three_sigma() + 10 * c.eps_boundary
        assert abs(est.value - exact) <= tol, (r_in, r_out, z_mod)


def test_halving_absorption_distance_moves_little():
    base = cfg(seed=13)
    finer = cfg(seed=13, eps_boundary=5e-7)
    dom = annulus_domain()
    a = estimate(dom, 0.5 + 0j, OuterCircle(), base)
    b = estimate(dom, 0.5 + 0j, OuterCircle(), finer)
    assert abs(a.value - b.value) <= 3.0 * math.hypot(a.stderr, b.stderr)


def test_extra_hole_never_raises_outer_measure():
    c = cfg(seed=21)
    less = estimate(annulus_domain(), 0.5 + 0j, OuterCircle(), c)
    more_dom = PerforatedDisc(1.0, (Hole(0j, 0.25), Hole(0.7 + 0j, 0.05)))
    more = estimate(more_dom, 0.5 + 0j, OuterCircle(), c)
    assert more.value <= less.value + 3.0 * math.hypot(less.stderr, more.stderr)


# ---------------------------------------------------------------------------
# classification: exact additivity on shared walks


def test_arc_partition_sums_exactly_to_circle():
    prof = simulate(annulus_domain(), 0.5 + 0j, cfg())
    total = prof.classify(OuterCircle()).target_hits
    parts = [prof.classify(OuterArc(k, 4)).target_hits for k in range(4)]
    assert sum(parts) == total


def test_rotation_copies_cover_the_circle():
    prof = simulate(annulus_domain(), 0.3 + 0.2j, cfg(5000, seed=3))
    all_copies = prof.classify(OuterArc(0, 4, copies=(0, 1, 2, 3)))
    assert all_copies.target_hits == prof.classify(OuterCircle()).target_hits


def test_every_walk_lands_somewhere():
    prof = simulate(annulus_domain(), 0.5 + 0j, cfg())
    outer = prof.classify(OuterCircle()).target_hits
    inner = prof.classify(HoleBoundaries((0,))).target_hits
    assert outer + inner + prof.lost == prof.n_walks


def test_classify_rejects_bad_targets():
    prof = simulate(annulus_domain(), 0.5 + 0j, cfg(1000, seed=2))
    with pytest.raises(MeasureError, match="out of range"):
        prof.classify(HoleBoundaries((3,)))
    with pytest.raises(MeasureError, match="unknown target"):
        prof.classify("everything")


# ---------------------------------------------------------------------------
# determinism


def test_same_seed_gives_identical_estimates():
    a = estimate(annulus_domain(), 0.5 + 0j, OuterCircle(), cfg(seed=11))
    b = estimate(annulus_domain(), 0.5 + 0j, OuterCircle(), cfg(seed=11))
    assert a == b


def test_thread_count_does_not_change_the_result():
    serial = estimate(annulus_domain(), 0.5 + 0j, OuterCircle(),
                      cfg(seed=11, threads=1))
    parallel = estimate(annulus_domain(), 0.5 + 0j, OuterCircle(),
                        cfg(seed=11, threads=4))
    assert serial == parallel


def test_walks_that_never_absorb_invalidate():
    short = cfg(n_walks=1000, seed=5, max_steps=3)
    prof = simulate(annulus_domain(), 0.5 + 0j, short)
    assert prof.lost > 990
    with pytest.raises(MeasureError, match="max_steps"):
        estimate(annulus_domain(), 0.5 + 0j, OuterCircle(), short)


# ---------------------------------------------------------------------------
# arenas from schedules


def test_arena_drops_holes_outside_the_circle():
    sched = RadiiSchedule(poles=(5.0 + 0j,), exponents=(4,), n0=4,
                          arena_rho=1.0, verified=(True,))
    dom, meta = build_arena(sched, 1, rotated=True)
    assert dom.holes == ()
    assert meta == []


def test_arena_rejects_straddling_holes():
    sched = RadiiSchedule(poles=(1.0 + 0j,), exponents=(2,), n0=1,
                          arena_rho=1.0, verified=(True,))
    with pytest.raises(MeasureError, match="straddles"):
        build_arena(sched, 1, rotated=False)


def test_arena_floors_sub_resolution_radii(pipeline):
    sched, _ = pipeline
    dom, meta = build_arena(sched, 10, rotated=False)
    assert len(dom.holes) == 1
    assert meta[0]["enlarged"] is True
    assert meta[0]["radius"] == HOLE_FLOOR
    assert meta[0]["exponent"] == sched.exponents[8] + 1
    assert abs(meta[0]["center"]) == pytest.approx(0.25, abs=1e-12)

    orbit_dom, orbit_meta = build_arena(sched, 10, rotated=True)
    assert len(orbit_dom.holes) == 4
    assert all(m["enlarged"] for m in orbit_meta)


def test_arena_validation():
    sched = blocked_ring_schedule()
    with pytest.raises(MeasureError, match="stage"):
        build_arena(sched, 2, rotated=True)
    with pytest.raises(MeasureError, match="stage"):
        build_arena(sched, -1, rotated=True)
    with pytest.raises(MeasureError, match="hole_floor"):
        build_arena(sched, 1, rotated=True, hole_floor=0.0)


def test_arena_floor_larger_than_clearance(pipeline):
    sched, _ = pipeline
    with pytest.raises(MeasureError, match="floor"):
        build_arena(sched, 10, rotated=False, hole_floor=0.3)


# ---------------------------------------------------------------------------
# certified lower bounds


def test_outer_bound_stage_zero_is_exact(pipeline):
    sched, thin = pipeline
    cert = verify_outer_bound(sched, 0, cfg(1000, seed=1), thinness=thin)
    assert cert.valid
    assert cert.value == 1.0
    assert cert.bound == 0.5


def test_outer_bound_early_stages_have_empty_arenas(pipeline):
    # the first rings sit far outside this arena, so their orbit discs
    # never perforate it and the measure stays exactly 1
    sched, thin = pipeline
    cert = verify_outer_bound(sched, 5, cfg(1000, seed=1), thinness=thin)
    assert cert.valid
    assert cert.value == 1.0
    assert cert.inputs["n_holes"] == 0


def test_outer_bound_stage_ten(pipeline):
    sched, thin = pipeline
    cert = verify_outer_bound(sched, 10, cfg(10000, seed=11), thinness=thin)
    assert cert.valid
    assert cert.inputs["n_holes"] == 4
    assert cert.value >= 0.7
    assert cert.margin > 0
    assert all(m["enlarged"] for m in cert.payload["holes"])


def test_arc_bound_stage_zero_quarter(pipeline):
    sched, thin = pipeline
    cert = verify_arc_bound(sched, Arc(2, 4), 0, cfg(10000, seed=11),
                            thinness=thin)
    assert cert.valid
    assert abs(cert.value - 0.25) <= 3.0 * cert.payload["stderr"] + 1e-5
    assert cert.bound == pytest.approx(0.125 - 3.0 * cert.payload["stderr"])


def test_arc_bound_stage_ten(pipeline):
    sched, thin = pipeline
    cert = verify_arc_bound(sched, Arc(2, 4), 10, cfg(10000, seed=11),
                            thinness=thin)
    assert cert.valid
    assert cert.payload["monotonicity_ok"]
    assert cert.payload["symmetry_ok"]
    assert len(cert.payload["orbit_arc_values"]) == 4


def test_arc_bound_rejects_mismatched_order(pipeline):
    sched, thin = pipeline
    with pytest.raises(MeasureError, match="order"):
        verify_arc_bound(sched, Arc(0, 8), 0, cfg(1000, seed=1),
                         thinness=thin)


def test_blocked_ring_yields_invalid_certificate():
    # adversarial schedule: huge half-radius discs wall off the origin,
    # so the outer circle is out of reach and the certificate must say so
    cert = verify_outer_bound(blocked_ring_schedule(), 1, cfg(2000, seed=3))
    assert not cert.valid
    assert cert.value < 0.1
    assert cert.margin < 0


def test_invalid_thinness_certificate_is_refused(pipeline):
    sched, thin = pipeline
    broken = replace(thin, valid=False)
    with pytest.raises(MeasureError, match="thinness"):
        verify_outer_bound(sched, 0, cfg(1000, seed=1), thinness=broken)
    with pytest.raises(MeasureError, match="thinness"):
        verify_arc_bound(sched, Arc(2, 4), 0, cfg(1000, seed=1),
                         thinness=broken)


def test_verification_is_reproducible(pipeline):
    sched, thin = pipeline
    a = verify_outer_bound(sched, 10, cfg(5000, seed=17), thinness=thin)
    b = verify_outer_bound(sched, 10, cfg(5000, seed=17), thinness=thin)
    assert a == b


def test_measure_certificates_serialize(pipeline):
    sched, thin = pipeline
    cert = verify_arc_bound(sched, Arc(2, 4), 10, cfg(5000, seed=17),
                            thinness=thin)
    text = canonical_json(cert.to_dict())
    parsed = json.loads(text)
    assert parsed["kind"] == "arc_measure_lower_bound"
    assert parsed["payload"]["holes"][0]["center"]["re"] == pytest.approx(
        0.25 * math.cos(math.pi / 4)
    )

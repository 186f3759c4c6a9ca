"""Cap schedules, staged weight selection, and full assembly runs.

Frozen selection values below come from running the exact pipeline once
and checking the small cases by hand: with a single ring cap 1/10 the
stage weight is the cap itself, the coefficient scan peaks at k = 1
with d = (1/10)(1/2)^2 = 1/40, and the headroom convention doubles that
to C_0 = 1/20.  The two-ring case keeps eps_1 = cap/2 = 1/20 on the
first candidate (0 halvings) because the enlarged sups stay under the
stage-0 constants.
"""

import dataclasses
import math
from fractions import Fraction

import pytest

from hullforge.certificates import Certificate, canonical_json, content_hash
from hullforge.construction import (
    AuditEntry,
    BuildConfig,
    ConstructionError,
    Schedule,
    assemble_counterexample,
    build_hull_schedule,
    bundle_valid,
    combine_caps,
    recheck_selection,
    select_epsilons,
    theorem_example_schedule,
)
from hullforge.geometry import Disc, lemma1_poles, theorem2_positions
from hullforge.series import LacunarySeries, smoothness_constants
from hullforge.thinness import build_potential, choose_disc_radii, \
    verify_thinness

mp = pytest.importorskip("mpmath")

TENTH = Fraction(1, 10)


# ---------------------------------------------------------------------------
# Cap schedules


def test_dyadic_schedule_divides_by_n_squared():
    sched = theorem_example_schedule([1j, -1j, 2j], (1, 2, 3))
    assert sched.radii == (Fraction(1, 2), Fraction(1, 4), Fraction(1, 8))
    assert sched.caps == (Fraction(1, 2), Fraction(1, 16), Fraction(1, 72))
    assert sched.c1_partial == 1 + Fraction(1, 4) + Fraction(1, 9)
    assert sched.c1_tail == Fraction(1, 3)
    assert sched.cap_sum_partial == sum(sched.caps)
    assert not sched.combined


def test_single_pole_schedule_has_unit_cap_ratio():
    sched = theorem_example_schedule([0.5 + 0j], (2,))
    assert sched.caps == (Fraction(1, 4),)
    assert sched.c1_partial == 1
    assert sched.c1() == 2


def test_schedule_brackets_the_dilogarithm():
    # caps 2^-n/n^2 for n = 1..50: the partial sum plus its 1/N tail
    # must bracket the closed form sum_{n>=1} 2^-n/n^2
    sched = theorem_example_schedule([0j] * 50, range(1, 51))
    mp.mp.dps = 50
    li2 = mp.polylog(2, mp.mpf(1) / 2)
    zeta2 = mp.pi**2 / 6

    def lo(f):
        return mp.mpf(f.numerator) / f.denominator

    assert lo(sched.cap_sum_partial) < li2 < lo(sched.cap_sum())
    assert lo(sched.c1_partial) < zeta2 < lo(sched.c1())
    assert float(sched.cap_sum_partial) == pytest.approx(
        0.5822405264650125, abs=1e-16)


def test_schedule_validation_catches_shape_errors():
    with pytest.raises(ConstructionError, match="at least one pole"):
        theorem_example_schedule([], ())
    with pytest.raises(ConstructionError, match="radius exponents"):
        theorem_example_schedule([0j], (1, 2))
    with pytest.raises(ConstructionError, match="at least 1"):
        theorem_example_schedule([0j], (0,))
    good = theorem_example_schedule([0j], (1,))
    with pytest.raises(ConstructionError, match="not rho/n"):
        Schedule(poles=good.poles, radii=good.radii,
                 caps=(Fraction(1, 3),))
    with pytest.raises(ConstructionError, match="without cap sources"):
        dataclasses.replace(good, combined=True)
    with pytest.raises(ConstructionError, match="unknown cap source"):
        dataclasses.replace(good, combined=True, cap_sources=("hm",))


def test_ring_caps_take_per_ring_minima():
    # 7 poles cover rings 0..2; ring 2 spans 1-based indices 4..7
    sched = theorem_example_schedule([0j] * 7, (1, 3, 2, 2, 2, 2, 9))
    r0, r1, r2 = sched.ring_caps(2)
    assert r0 == Fraction(1, 2)
    assert r1 == min(Fraction(1, 8) / 4, Fraction(1, 4) / 9)
    assert r2 == min(Fraction(1, 4) / 16, Fraction(1, 4) / 25,
                     Fraction(1, 4) / 36, Fraction(1, 512) / 49)
    with pytest.raises(ConstructionError, match="ring 3 covers indices "
                                                "8..15 but only 7"):
        sched.ring_caps(3)


# ---------------------------------------------------------------------------
# Hull schedule from certificates


def _measure_cert(kind, stage, valid=True):
    return Certificate(
        kind=kind, valid=valid, bound=0.125, value=0.25,
        margin=0.125 if valid else 0.0,
        method="test stub", inputs={"stage": stage}, payload={},
    )


@pytest.fixture(scope="module")
def certified_frame():
    """Small certified perforation: 3 translated poles, order 4."""
    anchor = complex(math.cos(math.pi / 4), math.sin(math.pi / 4))
    poles = tuple(p - anchor for p in theorem2_positions(1))
    from hullforge.geometry import orbit_centers

    centers, _ = orbit_centers(poles, 4)
    pot = build_potential(centers, working_radius=5.0 / 12.0,
                          weight_mode="uniform")
    sched = choose_disc_radii(pot, poles, n0=4, rho=5.0 / 12.0)
    cert = verify_thinness(pot, sched)
    assert cert.valid
    return anchor, cert


def test_hull_schedule_translates_back_and_hashes_inputs(certified_frame):
    anchor, thin = certified_frame
    certs = [_measure_cert("outer_measure_lower_bound", 1),
             _measure_cert("arc_measure_lower_bound", 1)]
    hull = build_hull_schedule(thin, certs, anchor=anchor)
    assert len(hull) == len(thin.schedule.poles)
    for p, q in zip(hull.poles, thin.schedule.poles):
        assert p == pytest.approx(q + anchor)
    assert hull.anchor == anchor
    assert hull.potential_ref == content_hash(thin.to_dict())
    assert hull.input_hashes["outer_measure_lower_bound_stage_1"] == \
        certs[0].hash()
    assert hull.input_hashes["arc_measure_lower_bound_stage_1"] == \
        certs[1].hash()
    for n, rho in enumerate(hull.radii):
        assert rho == Fraction(1, 2**thin.schedule.exponents[n])
        assert hull.caps[n] == rho / (n + 1) ** 2


def test_hull_schedule_requires_both_bound_kinds(certified_frame):
    _, thin = certified_frame
    outer = _measure_cert("outer_measure_lower_bound", 1)
    with pytest.raises(ConstructionError, match="full-circle and one arc"):
        build_hull_schedule(thin, [outer])
    bad_arc = _measure_cert("arc_measure_lower_bound", 5, valid=False)
    with pytest.raises(ConstructionError,
                       match=r"arc_measure_lower_bound\[stage 5\]"):
        build_hull_schedule(thin, [outer, bad_arc])


def test_hull_schedule_rejects_invalid_thinness(certified_frame):
    _, thin = certified_frame
    broken = dataclasses.replace(thin, valid=False)
    certs = [_measure_cert("outer_measure_lower_bound", 1),
             _measure_cert("arc_measure_lower_bound", 1)]
    with pytest.raises(ConstructionError, match="not known\nto be thin|"
                                                "not known to be thin"):
        build_hull_schedule(broken, certs)


# ---------------------------------------------------------------------------
# Cap combination


def test_combine_caps_takes_per_index_minimum():
    base = lemma1_poles(Disc(0j, 1.0), 4)
    hull = theorem_example_schedule(base.poles, (3, 4, 5, 6))
    # boundary gaps on a 4-pole circle dwarf every dyadic hull cap, so
    # force a mix: one tiny separation cap and one exact tie
    data = dataclasses.replace(
        base, caps=(Fraction(2), Fraction(1, 1000), hull.caps[2],
                    Fraction(3)))
    combined = combine_caps(hull, data)
    assert combined.combined
    for n in range(4):
        assert combined.caps[n] == min(hull.caps[n], Fraction(data.caps[n]))
    assert combined.cap_sources == ("hull", "lemma1", "hull", "hull")
    assert combined.c1_partial == sum(
        c / r for c, r in zip(combined.caps, hull.radii))
    assert combined.cap_sum_partial <= hull.cap_sum_partial


def test_combine_caps_equal_inputs_unchanged():
    data = lemma1_poles(Disc(0j, 1.0), 2)
    hull = theorem_example_schedule(data.poles, (1, 1))
    same = dataclasses.replace(
        data, caps=tuple(Fraction(c) for c in hull.caps))
    combined = combine_caps(hull, same)
    assert combined.caps == hull.caps
    assert combined.cap_sources == ("hull", "hull")


def test_combine_caps_rejects_mismatched_poles():
    data = lemma1_poles(Disc(0j, 1.0), 3)
    short = theorem_example_schedule(data.poles[:2], (1, 2))
    with pytest.raises(ConstructionError, match="pole sequences differ"):
        combine_caps(short, data)
    shifted = theorem_example_schedule(
        [p + 0.5 for p in data.poles], (1, 2, 3))
    with pytest.raises(ConstructionError, match="differ at index 1"):
        combine_caps(shifted, data)


# ---------------------------------------------------------------------------
# Stage selection


def test_single_ring_takes_its_cap_exactly():
    st = select_epsilons([TENTH], 0)
    assert st.epsilons == (TENTH,)
    assert st.constants == (Fraction(1, 20),)
    assert st.halvings == (0,)
    assert [e.label for e in st.audit] == [
        "eps_0 == R'_0",
        "sup_k d[0,k] k^0 < C_0",
        "d[0,8] > rho'_0^-8",
    ]
    sup_entry = st.audit[1]
    assert sup_entry.lhs == Fraction(1, 40)
    w, = st.witnesses
    assert (w.index, w.coefficient, w.threshold) == (
        8, Fraction(1, 5120), Fraction(3))


def test_two_ring_selection_frozen_state():
    st = select_epsilons([TENTH, TENTH], 2)
    assert st.epsilons == (TENTH, Fraction(1, 20))
    assert st.constants == (
        Fraction(1, 20), Fraction(1, 20), Fraction(1753, 7290))
    assert st.halvings == (0, 0)
    assert st.order == 2
    assert [(w.stage, w.index) for w in st.witnesses] == [(0, 8), (1, 14)]
    assert st.witnesses[1].coefficient == \
        Fraction(223357709, 2821109907456)
    by_label = {e.label: e for e in st.audit}
    assert by_label["sup_k d[1,k] k^1 < C_1"].lhs == Fraction(29, 648)
    assert by_label["sup_k d[1,k] k^2 < C_2"].lhs == Fraction(1753, 14580)
    assert by_label["C_1 > sup_k d[0,k] k^1"].rhs == Fraction(1, 40)
    assert by_label["d[1,8] > rho'_0^-8"].lhs == \
        Fraction(321193, 302330880)
    assert all(e.holds() for e in st.audit)
    assert len(st.audit) == 10


def test_selection_state_serializes_sorted_and_valid():
    doc = select_epsilons([TENTH, TENTH], 2).to_dict()
    assert doc["kind"] == "epsilon_selection"
    assert doc["valid"] is True
    keys = [(e["stage"], e["family"], e["label"]) for e in doc["audit"]]
    assert keys == sorted(keys)
    canonical_json(doc)  # must serialize without complaint


def test_selection_rejects_bad_caps():
    with pytest.raises(ConstructionError, match="at least one ring cap"):
        select_epsilons([], 0)
    with pytest.raises(ConstructionError, match="ring 1 cap is 0"):
        select_epsilons([TENTH, Fraction(0)], 0)
    with pytest.raises(ConstructionError, match="cost guard"):
        select_epsilons([TENTH] * 10, 0)
    with pytest.raises(ConstructionError, match="smooth order"):
        select_epsilons([TENTH], -1)


def test_order_floor_extends_constants_past_last_stage():
    st = select_epsilons([TENTH], 2)
    assert st.order == 2
    assert len(st.constants) == 3
    by_label = {e.label: e for e in st.audit}
    for l in (1, 2):
        entry = by_label[f"sup_k d[0,k] k^{l} < C_{l}"]
        assert entry.holds()
        assert st.constants[l] == 2 * entry.lhs
    assert recheck_selection(st) == ()


def test_shrinking_weights_preserves_smooth_bounds():
    # monotone safety: smaller weights can only lower every |d_k|, so
    # the recorded constants keep working
    st = select_epsilons([TENTH, TENTH], 2)
    shrunk = (st.epsilons[0] / 7, st.epsilons[1] / 3)
    cert = smoothness_constants(LacunarySeries(shrunk), st.order, st.k_max)
    for l, c in enumerate(st.constants):
        assert cert.constants[l] < c


# ---------------------------------------------------------------------------
# Independent re-check


def test_recheck_confirms_fresh_selections():
    assert recheck_selection(select_epsilons([TENTH], 0)) == ()
    assert recheck_selection(select_epsilons([TENTH, TENTH], 2)) == ()


def test_recheck_catches_tampered_sup():
    st = select_epsilons([TENTH, TENTH], 2)
    audit = list(st.audit)
    i = next(k for k, e in enumerate(audit)
             if e.label == "sup_k d[1,k] k^1 < C_1")
    audit[i] = dataclasses.replace(audit[i], lhs=audit[i].lhs / 2,
                                   margin=audit[i].rhs - audit[i].lhs / 2)
    bad = recheck_selection(dataclasses.replace(st, audit=tuple(audit)))
    assert any("recorded sup differs" in b for b in bad)


def test_recheck_catches_dropped_and_duplicated_entries():
    st = select_epsilons([TENTH], 0)
    dropped = dataclasses.replace(st, audit=st.audit[1:])
    bad = recheck_selection(dropped)
    assert any("missing audit entry: eps_0" in b for b in bad)
    assert any("expected 3" in b for b in bad)
    doubled = dataclasses.replace(st, audit=st.audit + st.audit[:1])
    bad = recheck_selection(doubled)
    assert any("duplicate audit entry" in b for b in bad)


def test_recheck_catches_inflated_weight():
    st = select_epsilons([TENTH, TENTH], 2)
    swollen = dataclasses.replace(
        st, epsilons=(st.epsilons[0], Fraction(2, 10)))
    bad = recheck_selection(swollen)
    assert any("eps_1 not strictly below" in b for b in bad)


def test_recheck_catches_margin_bookkeeping():
    st = select_epsilons([TENTH], 0)
    audit = list(st.audit)
    audit[1] = dataclasses.replace(audit[1], margin=Fraction(1))
    bad = recheck_selection(dataclasses.replace(st, audit=tuple(audit)))
    assert any("margin mismatch" in b for b in bad)


def test_integer_sups_match_fraction_route():
    from hullforge.construction import _int_sup

    eps = (Fraction(1, 7), Fraction(1, 13), Fraction(3, 31))
    cert = smoothness_constants(LacunarySeries(eps), 3, 1 << 16)
    pairs = [(e.numerator, e.denominator) for e in eps]
    for l in range(4):
        num, den, _ = _int_sup(pairs, 2, l)
        assert Fraction(num, den) == cert.constants[l]


# ---------------------------------------------------------------------------
# Full assembly


WALKS = 4000


@pytest.fixture(scope="module")
def lacunary_build():
    return assemble_counterexample(
        "theorem2", BuildConfig(seed=7, n_walks=WALKS))


@pytest.fixture(scope="module")
def boundary_build():
    return assemble_counterexample(
        "theorem1",
        BuildConfig(seed=23, n_walks=WALKS, stage_sample=(1, 2, 5, 8)))


def test_lacunary_build_produces_valid_bundle(lacunary_build):
    series, bundle = lacunary_build
    assert isinstance(series, LacunarySeries)
    assert len(series.epsilons) == 4  # rings 0..3
    assert bundle_valid(bundle)
    for name in ("thinness", "cap_schedule", "epsilon_selection",
                 "smoothness", "series", "build"):
        assert name in bundle
    for n in (1, 2, 5, 10):
        assert bundle[f"outer_measure_stage_{n}"]["valid"]
        assert bundle[f"arc_measure_stage_{n}"]["valid"]
    for j in range(4):
        assert bundle[f"radius_witness_stage_{j}"]["valid"]
    assert bundle["build"]["mode"] == "theorem2"
    assert bundle["series"]["epsilons"] == list(series.epsilons)


def test_lacunary_build_cross_references_by_hash(lacunary_build):
    _, bundle = lacunary_build
    refs = bundle["build"]["refs"]
    assert set(refs) == set(bundle) - {"build"}
    for name, digest in refs.items():
        assert content_hash(bundle[name]) == digest
    sched = bundle["cap_schedule"]
    assert sched["input_hashes"]["thinness"] == \
        content_hash(bundle["thinness"])


def test_lacunary_build_replays_byte_identical(lacunary_build):
    series, bundle = lacunary_build
    again, bundle2 = assemble_counterexample(
        "theorem2", BuildConfig(seed=7, n_walks=WALKS))
    assert again.epsilons == series.epsilons
    assert canonical_json(bundle2) == canonical_json(bundle)


def test_boundary_build_produces_valid_bundle(boundary_build):
    series, bundle = boundary_build
    assert bundle_valid(bundle)
    assert len(series) == 8
    assert bundle["series"]["kind"] == "pole_series"
    for n in range(8):
        assert bundle[f"liminf_pole_{n}"]["valid"]
    sched = bundle["cap_schedule"]
    assert sched["combined"]
    assert set(sched["cap_sources"]) <= {"hull", "lemma1"}
    assert "boundary_layout" in bundle


def test_boundary_series_coefficients_meet_both_caps(boundary_build):
    series, bundle = boundary_build
    data = lemma1_poles(Disc(0j, 1.0), 8)
    sched = bundle["cap_schedule"]
    for n in range(8):
        c = abs(series.coefficient(n))
        assert c <= float(data.caps[n]) + 1e-15
        assert c == float(sched["caps"][n])


def test_oversized_boundary_tolerance_flags_bundle():
    series, bundle = assemble_counterexample(
        "theorem2", BuildConfig(seed=7, n_walks=WALKS, eps_boundary=0.5))
    assert series is None
    assert not bundle_valid(bundle)
    assert not bundle["build"]["valid"]
    assert "harmonic measure stage failed" in bundle["build"]["reason"]
    dead = bundle["outer_measure_stage_1"]
    assert not dead["valid"]
    assert dead["method"].startswith("aborted:")
    assert "epsilon_selection" not in bundle


def test_assembly_rejects_unknown_mode():
    with pytest.raises(ConstructionError, match="unknown mode"):
        assemble_counterexample("theorem3", BuildConfig(seed=1))


def test_build_config_validation():
    with pytest.raises(ConstructionError, match="seed"):
        BuildConfig(seed=-1)
    with pytest.raises(ConstructionError, match="at least one measure"):
        BuildConfig(seed=1, stage_sample=())
    with pytest.raises(ConstructionError, match="positive\nintegers|"
                                                "positive integers"):
        BuildConfig(seed=1, stage_sample=(0,))
    with pytest.raises(ConstructionError, match="n_max"):
        BuildConfig(seed=1, n_max=0)


def test_bundle_validity_walks_every_flag():
    assert bundle_valid({"a": {"valid": True}, "b": {"x": 1}})
    assert not bundle_valid({"a": {"valid": True}, "b": {"valid": False}})
    assert bundle_valid({})

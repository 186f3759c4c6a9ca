"""Command line front end for building and querying certificate bundles.

One executable, seven subcommands: construct runs the full pipeline
from a JSON config and writes a certificate bundle; hm estimates a
harmonic measure for an ad-hoc perforated disc; coeffs, witness,
smooth, probe, and plot read a bundle back and emit CSV, JSON, or SVG
derived from the stored series.

Exit codes: 0 success, 2 configuration or usage error, 3 verification
failure (an invalid certificate, a failed check, or a bundle whose
hashes no longer match), 4 internal error (a computation aborted
before producing a verdict).  Random seeds are always explicit: no
command draws entropy from the clock, so equal inputs give equal
outputs byte for byte.
"""

from __future__ import annotations

import argparse
import csv
import io
import math
import os
import sys
from fractions import Fraction
from typing import Mapping, Optional, Sequence

from . import svgplot
from .certificates import CertificateError, canonical_json, read_json, \
    read_manifest, verify_bundle, write_bundle, write_json
from .construction import BuildConfig, ConstructionError, \
    assemble_counterexample
from .geometry import Arc, GeometryError, Hole, PerforatedDisc
from .harmonic import MeasureError, OuterArc, OuterCircle, WalkConfig, \
    estimate
from .probes import ProbeError, hull_evidence, make_probe, \
    two_constant_check
from .series import LacunarySeries, PoleSeries, SeriesError, \
    coefficient_table, lacunary_coefficient, radius_witness, \
    smoothness_constants
from .thinness import RadiiSchedule

__all__ = ["CliError", "main"]

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_VERIFY = 3
EXIT_INTERNAL = 4

# cross-check budget for the coefficient dual route; beyond this the
# dense-division table is quadratic and the caller gets the scan route
COEFF_CROSS_CHECK = 256

_CONFIG_KEYS = {
    "mode", "seed", "domain", "stages", "n_max", "smooth_order",
    "pole_count", "stage_sample", "n_walks", "eps_boundary", "threads",
    "k_max", "rho_trials", "n0", "hole_floor", "anchor_angle", "out",
}


class CliError(Exception):
    """Carries the exit code alongside the message."""

    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


# ---------------------------------------------------------------------------
# small parsers and decoders


def _parse_arc(text: str) -> Arc:
    parts = text.split("/")
    if len(parts) != 2:
        raise CliError(EXIT_CONFIG, f"arc must be k0/n0, got {text!r}")
    try:
        k0, n0 = int(parts[0]), int(parts[1])
    except ValueError:
        raise CliError(EXIT_CONFIG, f"arc must be two integers, got {text!r}")
    if n0 < 1 or not 0 <= k0 < n0:
        raise CliError(EXIT_CONFIG,
                       f"arc needs 0 <= k0 < n0 with n0 >= 1, got {text!r}")
    return Arc(k0, n0)


def _parse_floats(text: str, count: int, what: str) -> tuple:
    parts = text.split(",")
    if len(parts) != count:
        raise CliError(EXIT_CONFIG,
                       f"{what} needs {count} comma-separated numbers, "
                       f"got {text!r}")
    try:
        return tuple(float(p) for p in parts)
    except ValueError:
        raise CliError(EXIT_CONFIG, f"{what} is not numeric: {text!r}")


def _parse_span(text: str, what: str) -> tuple:
    """'a..b' or a single index, inclusive on both ends."""
    lo, sep, hi = text.partition("..")
    try:
        a = int(lo)
        b = int(hi) if sep else a
    except ValueError:
        raise CliError(EXIT_CONFIG, f"{what} must be k or a..b, got {text!r}")
    if a < 0 or b < a:
        raise CliError(EXIT_CONFIG, f"{what} range {text!r} is empty or "
                       f"negative")
    return a, b


def _big_int(text) -> int:
    """Integer from a stored decimal string of any length."""
    if isinstance(text, int):
        return text
    limit = sys.get_int_max_str_digits()
    try:
        if len(text) >= limit:
            sys.set_int_max_str_digits(len(text) + 10)
        return int(text)
    finally:
        sys.set_int_max_str_digits(limit)


def _dec_fraction(obj) -> Fraction:
    if isinstance(obj, Mapping) and "num" in obj and "den" in obj:
        return Fraction(_big_int(obj["num"]), _big_int(obj["den"]))
    if isinstance(obj, int):
        return Fraction(obj)
    raise CliError(EXIT_CONFIG, f"not a stored rational: {obj!r}")


def _dec_complex(obj) -> complex:
    if isinstance(obj, Mapping) and "re" in obj and "im" in obj:
        return complex(obj["re"], obj["im"])
    if isinstance(obj, (int, float)):
        return complex(obj)
    raise CliError(EXIT_CONFIG, f"not a stored complex number: {obj!r}")


def _dec_coefficient(obj):
    """Pole-series coefficient: a stored rational or a pair of them."""
    if isinstance(obj, Sequence) and not isinstance(obj, (str, Mapping)) \
            and len(obj) == 2:
        return (_dec_fraction(obj[0]), _dec_fraction(obj[1]))
    return _dec_fraction(obj)


# ---------------------------------------------------------------------------
# run configuration


def _load_run_config(path: str, out_override: Optional[str]):
    try:
        doc = read_json(path)
    except FileNotFoundError:
        raise CliError(EXIT_CONFIG, f"config file not found: {path}")
    except (OSError, ValueError) as err:
        raise CliError(EXIT_CONFIG, f"config file unreadable: {err}")
    if not isinstance(doc, Mapping):
        raise CliError(EXIT_CONFIG, "config must be a JSON object")
    unknown = sorted(set(doc) - _CONFIG_KEYS)
    if unknown:
        raise CliError(EXIT_CONFIG,
                       f"unknown config keys: {', '.join(unknown)}")
    if "seed" not in doc:
        raise CliError(EXIT_CONFIG, "config is missing the mandatory seed")
    mode = doc.get("mode", "theorem2")
    if mode not in ("theorem1", "theorem2"):
        raise CliError(EXIT_CONFIG,
                       f"mode must be theorem1 or theorem2, got {mode!r}")
    domain = doc.get("domain", "disc_in_plane")
    if domain != "disc_in_plane":
        raise CliError(EXIT_CONFIG,
                       f"only the disc_in_plane domain pair is implemented, "
                       f"got {domain!r}")
    n_walks = doc.get("n_walks", 20000)
    if not isinstance(n_walks, int) or n_walks < 100:
        raise CliError(EXIT_CONFIG,
                       f"n_walks must be an integer >= 100, got {n_walks!r}")
    eps = doc.get("eps_boundary", 1e-6)
    if not 0 < float(eps) < 1:
        raise CliError(EXIT_CONFIG,
                       f"eps_boundary must be in (0, 1), got {eps!r}")
    out = out_override or doc.get("out") or "out"
    kwargs = {}
    for key in ("stages", "n_max", "smooth_order", "pole_count",
                "threads", "k_max", "n0", "hole_floor", "anchor_angle"):
        if key in doc and doc[key] is not None:
            kwargs[key] = doc[key]
    if "stage_sample" in doc:
        kwargs["stage_sample"] = tuple(doc["stage_sample"])
    if "rho_trials" in doc:
        kwargs["rho_trials"] = tuple(doc["rho_trials"])
    try:
        config = BuildConfig(seed=doc["seed"], n_walks=n_walks,
                             eps_boundary=float(eps), **kwargs)
    except (ConstructionError, TypeError) as err:
        raise CliError(EXIT_CONFIG, f"invalid config: {err}")
    return config, mode, out


# ---------------------------------------------------------------------------
# bundle access


class BundleData:
    """Everything the query commands reconstruct from a stored bundle."""

    def __init__(self, directory: str):
        try:
            manifest = read_manifest(directory)
        except CertificateError as err:
            raise CliError(EXIT_CONFIG, f"unknown bundle: {err}")
        checks = verify_bundle(directory)
        stale = sorted(name for name, ok in checks.items() if not ok)
        if stale:
            raise CliError(EXIT_VERIFY,
                           f"stale or missing bundle documents: "
                           f"{', '.join(stale)}")
        self.directory = directory
        self.manifest = manifest
        self._docs = {}

    def doc(self, name: str) -> Mapping:
        if name not in self._docs:
            if name not in self.manifest["files"]:
                raise CliError(EXIT_CONFIG,
                               f"bundle has no document {name!r}")
            self._docs[name] = read_json(
                os.path.join(self.directory, f"{name}.json"))
        return self._docs[name]

    def series(self):
        doc = self.doc("series")
        if doc["kind"] == "lacunary_series":
            eps = tuple(_dec_fraction(e) for e in doc["epsilons"])
            return LacunarySeries(eps)
        if doc["kind"] == "pole_series":
            poles = tuple(_dec_complex(p) for p in doc["poles"])
            coeffs = tuple(_dec_coefficient(c) for c in doc["coefficients"])
            return PoleSeries(poles, coeffs)
        raise CliError(EXIT_CONFIG,
                       f"unknown stored series kind {doc['kind']!r}")

    def block_series(self) -> LacunarySeries:
        series = self.series()
        if not isinstance(series, LacunarySeries):
            raise CliError(EXIT_CONFIG,
                           "this command needs a block-series bundle; the "
                           "stored series clears isolated poles")
        return series

    def anchor(self) -> complex:
        return _dec_complex(self.doc("series")["anchor"])

    def schedule(self) -> RadiiSchedule:
        sd = self.doc("thinness")["schedule"]
        return RadiiSchedule(
            poles=tuple(_dec_complex(p) for p in sd["poles"]),
            exponents=tuple(sd["exponents"]),
            n0=sd["n0"],
            arena_rho=sd["arena_rho"],
            verified=tuple(sd["verified"]),
        )

    def arc(self) -> Arc:
        return Arc(self.doc("series")["arc_k0"], self.schedule().n0)

    def w_bound(self) -> float:
        caps = self.doc("cap_schedule")
        c1 = _dec_fraction(caps["c1_partial"]) + \
            _dec_fraction(caps["c1_tail"])
        return 2.0 * float(c1)


# ---------------------------------------------------------------------------
# output helpers


def _emit(payload: Mapping, as_json: bool, lines: Sequence) -> None:
    if as_json:
        print(canonical_json(payload))
    else:
        for line in lines:
            print(line)


def _write_text(path: str, text: str) -> None:
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write(text)


def _flag_map(docs: Mapping) -> dict:
    return {name: bool(doc["valid"]) for name, doc in docs.items()
            if isinstance(doc, Mapping) and "valid" in doc}


# ---------------------------------------------------------------------------
# construct


def _fail_verify(flags: Mapping) -> None:
    bad = sorted(name for name, ok in flags.items() if not ok)
    if bad:
        raise CliError(EXIT_VERIFY,
                       f"invalid certificates: {', '.join(bad)}")


def _assemble(mode: str, config: BuildConfig):
    try:
        return assemble_counterexample(mode, config)
    except (ConstructionError, MeasureError, SeriesError,
            GeometryError) as err:
        raise CliError(EXIT_INTERNAL, f"assembly aborted: {err}")


def cmd_construct(args) -> int:
    config, mode, out = _load_run_config(args.config, args.out)
    if args.verify_only:
        bundle = BundleData(out)
        stored = {}
        for name in bundle.manifest["files"]:
            doc = bundle.doc(name)
            if isinstance(doc, Mapping) and "valid" in doc:
                stored[name] = bool(doc["valid"])
        _, docs = _assemble(mode, config)
        fresh = _flag_map(docs)
        if stored != fresh:
            diff = sorted(set(stored.items()) ^ set(fresh.items()))
            names = sorted({name for name, _ in diff})
            raise CliError(EXIT_VERIFY,
                           f"pass/fail flags do not reproduce for: "
                           f"{', '.join(names)}")
        payload = {
            "kind": "verify", "mode": mode, "out": out,
            "documents": len(stored), "match": True,
            "valid": all(stored.values()), "flags": stored,
        }
        _emit(payload, args.json, [
            f"bundle {out}: {len(stored)} flagged documents reproduced",
            f"valid: {all(stored.values())}",
        ])
        _fail_verify(stored)
        return EXIT_OK
    _, docs = _assemble(mode, config)
    manifest = write_bundle(out, docs)
    flags = _flag_map(docs)
    payload = {
        "kind": "construct", "mode": mode, "out": out,
        "documents": len(manifest["files"]),
        "valid": all(flags.values()), "flags": flags,
    }
    _emit(payload, args.json, [
        f"bundle {out}: {len(manifest['files'])} documents written",
        f"valid: {all(flags.values())}",
    ])
    _fail_verify(flags)
    return EXIT_OK


# ---------------------------------------------------------------------------
# hm


def cmd_hm(args) -> int:
    if not args.rho > 0:
        raise CliError(EXIT_CONFIG,
                       f"outer radius must be positive, got {args.rho}")
    if args.walks < 100:
        raise CliError(EXIT_CONFIG,
                       f"need at least 100 walks, got {args.walks}")
    holes = []
    for text in args.hole or ():
        cx, cy, r = _parse_floats(text, 3, "hole")
        holes.append(Hole(complex(cx, cy), r))
    try:
        domain = PerforatedDisc(args.rho, tuple(holes))
    except GeometryError as err:
        raise CliError(EXIT_CONFIG, str(err))
    sx, sy = _parse_floats(args.start, 2, "start")
    start = complex(sx, sy)
    if not domain.contains(start):
        raise CliError(EXIT_CONFIG,
                       f"start point {args.start} is not inside the domain")
    if args.arc is not None:
        arc = _parse_arc(args.arc)
        target = OuterArc(arc.k0, arc.n0)
    else:
        target = OuterCircle()
    try:
        cfg = WalkConfig(n_walks=args.walks, rng_seed=args.seed,
                         eps_boundary=args.eps, threads=args.threads)
    except (ValueError, MeasureError) as err:
        raise CliError(EXIT_CONFIG, str(err))
    try:
        est = estimate(domain, start, target, cfg)
    except MeasureError as err:
        raise CliError(EXIT_INTERNAL, f"measure estimate aborted: {err}")
    payload = {
        "kind": "harmonic_measure",
        "value": est.value,
        "stderr": est.stderr,
        "three_sigma": est.three_sigma(),
        "n_walks": est.n_walks,
        "hits": est.target_hits,
        "lost": est.lost,
        "seed": est.seed,
        "rho": args.rho,
        "holes": len(holes),
        "arc": args.arc,
        "start": [sx, sy],
    }
    print(canonical_json(payload))
    return EXIT_OK


# ---------------------------------------------------------------------------
# coeffs


def cmd_coeffs(args) -> int:
    bundle = BundleData(args.bundle)
    series = bundle.block_series()
    lo, hi = _parse_span(args.k, "--k")
    values = [lacunary_coefficient(series, k) for k in range(lo, hi + 1)]
    crossed = hi <= COEFF_CROSS_CHECK
    if crossed:
        table = coefficient_table(series, hi)
        for k, v in zip(range(lo, hi + 1), values):
            if table[k] != v:
                raise CliError(EXIT_INTERNAL,
                               f"coefficient routes disagree at k={k}")
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["k", "numerator", "denominator", "decimal"])
    for k, v in zip(range(lo, hi + 1), values):
        writer.writerow([k, v.numerator, v.denominator,
                         format(float(v), ".12g")])
    path = args.out or os.path.join(bundle.directory, "coeffs.csv")
    _write_text(path, buf.getvalue())
    payload = {
        "kind": "coeffs", "path": path, "k_lo": lo, "k_hi": hi,
        "rows": hi - lo + 1, "cross_checked": crossed,
    }
    _emit(payload, args.json, [
        f"{hi - lo + 1} exact coefficients written to {path}",
        f"dual-route cross check: {'yes' if crossed else 'skipped'}",
    ])
    return EXIT_OK


def _log10_safe(v: Fraction) -> float:
    return (math.log(v.numerator) - math.log(v.denominator)) / math.log(10)


# ---------------------------------------------------------------------------
# witness


def cmd_witness(args) -> int:
    if args.bundle is not None:
        series = BundleData(args.bundle).block_series()
    else:
        series = LacunarySeries((Fraction(1),))
    stage = args.stage if args.stage is not None else series.stages
    if not 0 <= stage <= series.stages:
        raise CliError(EXIT_CONFIG,
                       f"stage {stage} outside 0..{series.stages}")
    threshold = None
    if args.threshold is not None:
        try:
            threshold = Fraction(args.threshold)
        except (ValueError, ZeroDivisionError):
            raise CliError(EXIT_CONFIG,
                           f"threshold must be rational, got "
                           f"{args.threshold!r}")
        if threshold <= series.radius(stage):
            raise CliError(EXIT_CONFIG,
                           f"threshold {threshold} must exceed the stage "
                           f"radius {series.radius(stage)}")
    try:
        witness = radius_witness(series, stage, threshold=threshold,
                                 k_max=args.k_max)
    except SeriesError as err:
        raise CliError(EXIT_VERIFY, f"no witness found: {err}")
    payload = {
        "kind": "radius_witness",
        "stage": witness.stage,
        "index": witness.index,
        "threshold": witness.threshold,
        "coefficient": witness.coefficient,
        "margin": float(witness.margin),
        "root_value": witness.root_value(),
    }
    _emit(payload, args.json, [
        f"stage {witness.stage}: k={witness.index} beats "
        f"threshold {witness.threshold}",
        f"|d_k|^(1/k) = {witness.root_value():.6f}",
    ])
    return EXIT_OK


# ---------------------------------------------------------------------------
# smooth


def cmd_smooth(args) -> int:
    bundle = BundleData(args.bundle)
    series = bundle.block_series()
    try:
        cert = smoothness_constants(series, args.order, args.k_max)
    except SeriesError as err:
        raise CliError(EXIT_CONFIG, str(err))
    doc = cert.to_dict()
    path = args.out or os.path.join(bundle.directory,
                                    "smoothness_check.json")
    write_json(path, doc)
    payload = {"kind": "smooth", "path": path, "order": args.order,
               "valid": cert.valid}
    _emit(payload, args.json, [
        f"smoothness constants through order {args.order} written to "
        f"{path}",
        f"valid: {cert.valid}",
    ])
    if not cert.valid:
        raise CliError(EXIT_VERIFY, "smoothness certificate is invalid")
    return EXIT_OK


# ---------------------------------------------------------------------------
# probe


def _evidence_span(args, series) -> range:
    if isinstance(series, LacunarySeries):
        top = series.stages
    else:
        top = len(series)
    if args.stages is not None:
        lo, hi = _parse_span(args.stages, "--stages")
        if hi > top:
            raise CliError(EXIT_CONFIG,
                           f"probe stage {hi} exceeds the stored {top}")
    else:
        lo, hi = 1, top
    return range(lo, hi + 1)


def cmd_probe(args) -> int:
    bundle = BundleData(args.bundle)
    series = bundle.series()
    anchor = bundle.anchor()
    span = _evidence_span(args, series)
    csv_path = os.path.join(bundle.directory, "evidence.csv")
    svg_path = os.path.join(bundle.directory, "evidence.svg")
    try:
        table = hull_evidence(series, span, at=anchor, csv_path=csv_path,
                              svg_path=svg_path)
    except ProbeError as err:
        raise CliError(EXIT_INTERNAL, f"evidence table aborted: {err}")
    checks = []
    failed = []
    if args.check:
        if args.seed is None:
            raise CliError(EXIT_CONFIG,
                           "--check runs Monte Carlo stages: --seed is "
                           "mandatory")
        top = span[-1]
        schedule = bundle.schedule()
        arc = bundle.arc()
        w_bound = bundle.w_bound()
        probe = make_probe(series, top, at=anchor)
        for n in sorted(set(args.check)):
            if not 0 <= n < top:
                raise CliError(EXIT_CONFIG,
                               f"--check stage {n} must sit in 0..{top - 1} "
                               f"below the probe stage {top}")
            cfg = WalkConfig(n_walks=args.walks, rng_seed=args.seed,
                             eps_boundary=args.eps, threads=args.threads)
            try:
                report = two_constant_check(probe, series, schedule, n,
                                            cfg, arc=arc, w_bound=w_bound,
                                            at=anchor)
            except ProbeError as err:
                raise CliError(EXIT_INTERNAL, f"propagation check aborted "
                               f"at stage {n}: {err}")
            except MeasureError as err:
                raise CliError(EXIT_INTERNAL, f"measure stage aborted at "
                               f"stage {n}: {err}")
            name = f"two_constant_stage_{n}"
            write_json(os.path.join(bundle.directory, f"{name}.json"),
                       report.to_dict())
            checks.append({"stage": n, "probe_stage": top,
                           "passed": report.passed, "s0": report.s0,
                           "implied": report.implied,
                           "slack": report.slack})
            if not report.passed:
                failed.append(name)
    payload = {
        "kind": "probe",
        "csv": csv_path,
        "svg": svg_path,
        "rows": [
            {"probe_stage": r.stage, "value": None
             if r.value == -math.inf else r.value,
             "exact_zero": r.exact_zero}
            for r in table.rows
        ],
        "checks": checks,
    }
    _emit(payload, args.json, [
        f"evidence table over probe stages {span[0]}..{span[-1]} "
        f"written to {csv_path}",
        *(f"stage {c['stage']}: {'pass' if c['passed'] else 'FAIL'}"
          for c in checks),
    ])
    if failed:
        raise CliError(EXIT_VERIFY,
                       f"propagation check failed: {', '.join(failed)}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# plot


def cmd_plot(args) -> int:
    bundle = BundleData(args.bundle)
    path = args.out or os.path.join(bundle.directory,
                                    f"plot_{args.what}.svg")
    if args.what == "domain":
        sched = bundle.schedule()
        arc = bundle.arc()
        rho = sched.arena_rho
        holes = []
        for pole, exponent in zip(sched.poles, sched.exponents):
            radius = 2.0 ** -exponent
            if abs(pole) + radius < rho:
                holes.append((pole.real, pole.imag, radius))
        text = svgplot.plane_figure(
            rho=rho, holes=holes, arc=(arc.k0, arc.n0),
            title="certified arena: protection discs and target arc",
        )
    elif args.what == "poles":
        sched = bundle.schedule()
        reach = max(abs(p) for p in sched.poles) * 1.15
        text = svgplot.plane_figure(
            rho=reach,
            points=[(p.real, p.imag) for p in sched.poles],
            title="pole cloud (view circle at padded max modulus)",
        )
    elif args.what == "coeffs":
        series = bundle.block_series()
        pts = []
        for k in range(1, 129):
            d = lacunary_coefficient(series, k)
            if d > 0:
                pts.append((float(k), _log10_safe(d)))
        text = svgplot.line_chart(
            pts, title="coefficient decay", x_label="k",
            y_label="log10 |d_k|",
        )
    elif args.what == "decay":
        series = bundle.series()
        table = hull_evidence(series, _evidence_span(args, series),
                              at=bundle.anchor())
        text = table.svg_text()
    else:
        raise CliError(EXIT_CONFIG, f"unknown plot {args.what!r}")
    _write_text(path, text)
    payload = {"kind": "plot", "what": args.what, "path": path}
    _emit(payload, args.json, [f"{args.what} figure written to {path}"])
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hullforge",
        description="build and query certificate bundles for series "
                    "whose graphs carry nontrivial pluripolar hulls",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, func, help_text):
        p = sub.add_parser(name, help=help_text)
        p.set_defaults(func=func)
        p.add_argument("--json", action="store_true",
                       help="emit a single JSON object on stdout")
        return p

    p = add("construct", cmd_construct,
            "run the full pipeline from a config file")
    p.add_argument("--config", required=True, help="path to the JSON config")
    p.add_argument("--out", help="override the configured bundle directory")
    p.add_argument("--verify-only", action="store_true",
                   help="re-run in memory and compare pass/fail flags "
                        "against the stored bundle")

    p = add("hm", cmd_hm, "estimate a harmonic measure by random walks")
    p.add_argument("--rho", type=float, required=True,
                   help="outer disc radius")
    p.add_argument("--hole", action="append", metavar="CX,CY,R",
                   help="closed disc removed from the domain (repeatable)")
    p.add_argument("--arc", metavar="K0/N0",
                   help="target arc of the outer circle; default is the "
                        "whole circle")
    p.add_argument("--start", default="0,0", metavar="X,Y",
                   help="walk start point (default the origin)")
    p.add_argument("--walks", type=int, required=True,
                   help="number of walks")
    p.add_argument("--seed", type=int, required=True, help="RNG seed")
    p.add_argument("--eps", type=float, default=1e-6,
                   help="boundary capture distance")
    p.add_argument("--threads", type=int, default=1,
                   help="worker cap for the walk engine")

    p = add("coeffs", cmd_coeffs,
            "exact series coefficients from a bundle, as CSV")
    p.add_argument("--bundle", required=True, help="bundle directory")
    p.add_argument("--k", default="0..64", metavar="A..B",
                   help="coefficient index range (default 0..64)")
    p.add_argument("--out", help="CSV path (default coeffs.csv in the "
                                 "bundle)")

    p = add("witness", cmd_witness,
            "smallest coefficient index beating a radius threshold")
    p.add_argument("--bundle", help="bundle directory; without it the "
                                    "single-block unit demo series is used")
    p.add_argument("--stage", type=int, help="series stage (default last)")
    p.add_argument("--threshold", help="rational threshold radius "
                                       "(default the stage standard)")
    p.add_argument("--k-max", type=int, default=1 << 20,
                   help="scan limit")

    p = add("smooth", cmd_smooth,
            "recompute smoothness constants for a stored series")
    p.add_argument("--bundle", required=True, help="bundle directory")
    p.add_argument("--order", type=int, default=3,
                   help="highest derivative order")
    p.add_argument("--k-max", type=int, default=1 << 16,
                   help="exact scan depth; the tail is covered by a "
                        "growth bound")
    p.add_argument("--out", help="JSON path (default "
                                 "smoothness_check.json in the bundle)")

    p = add("probe", cmd_probe,
            "probe decay evidence and optional propagation checks")
    p.add_argument("--bundle", required=True, help="bundle directory")
    p.add_argument("--stages", metavar="A..B",
                   help="probe stages for the evidence table (default all)")
    p.add_argument("--check", action="append", type=int, metavar="N",
                   help="run the propagation inequality at evaluation "
                        "stage N (repeatable)")
    p.add_argument("--walks", type=int, default=20000,
                   help="walks per measure estimate")
    p.add_argument("--seed", type=int, help="RNG seed (mandatory with "
                                            "--check)")
    p.add_argument("--eps", type=float, default=1e-6,
                   help="boundary capture distance")
    p.add_argument("--threads", type=int, default=1,
                   help="worker cap for the walk engine")

    p = add("plot", cmd_plot, "render stored data as SVG")
    p.add_argument("--bundle", required=True, help="bundle directory")
    p.add_argument("--what", required=True,
                   choices=("domain", "poles", "coeffs", "decay"),
                   help="which figure to draw")
    p.add_argument("--stages", metavar="A..B",
                   help="probe stages for the decay figure")
    p.add_argument("--out", help="SVG path (default plot_WHAT.svg in the "
                                 "bundle)")
    return parser


def main(argv: Optional[Sequence] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as err:
        return EXIT_CONFIG if err.code not in (0, None) else EXIT_OK
    try:
        return args.func(args)
    except CliError as err:
        print(f"error: {err}", file=sys.stderr)
        return err.code
    except CertificateError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_VERIFY
    except Exception as err:  # pragma: no cover - last-resort guard
        print(f"internal error: {err}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())

"""Certificates and their canonical serialized form.

A certificate is the machine-checkable record of one verified
inequality: what was checked, against which bound, with what margin and
method.  Serialization is canonical (sorted keys, fixed separators,
rationals as numerator/denominator strings) so that equal content means
equal bytes, which is what the bundle manifest hashes and the replay
guarantees rest on.
"""

from __future__ import annotations

import hashlib
import json
import os
import sys
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Optional

__all__ = [
    "Certificate",
    "CertificateError",
    "canonical_json",
    "content_hash",
    "write_json",
    "read_json",
    "write_bundle",
    "read_manifest",
    "verify_bundle",
    "load_certificate",
]

MANIFEST_NAME = "manifest.json"
BUNDLE_FORMAT = 1


class CertificateError(ValueError):
    """Raised for malformed certificates, bundles, or stale manifests."""


def _encode(obj):
    if isinstance(obj, Fraction):
        out = {"num": str(obj.numerator), "den": str(obj.denominator)}
        try:
            out["dec"] = float(obj)
        except OverflowError:
            pass
        return out
    if isinstance(obj, complex):
        return {"re": obj.real, "im": obj.imag}
    if hasattr(obj, "item"):  # numpy scalars
        return obj.item()
    raise TypeError(f"not canonically serializable: {type(obj).__name__}")


def canonical_json(obj) -> str:
    """Deterministic JSON: sorted keys, no whitespace, stable encodings.

    Exact rationals from deep coefficient scans can run to tens of
    thousands of digits; the interpreter's int-to-string guard is
    raised for the duration of the dump and restored after.
    """
    guard = sys.get_int_max_str_digits()
    if guard:
        sys.set_int_max_str_digits(100_000_000)
    try:
        return json.dumps(obj, sort_keys=True, separators=(",", ":"),
                          default=_encode, allow_nan=False)
    finally:
        if guard:
            sys.set_int_max_str_digits(guard)


def content_hash(obj) -> str:
    return hashlib.sha256(canonical_json(obj).encode("ascii")).hexdigest()


@dataclass(frozen=True)
class Certificate:
    """One verified inequality: value compared against bound.

    margin is value - bound for >= checks (the only direction used
    here); valid mirrors margin >= 0 plus any side conditions the
    method imposes.  inputs identifies what was checked; payload holds
    method detail (per-component data, seeds, enlargements).
    """

    kind: str
    valid: bool
    bound: float
    value: float
    margin: float
    method: str
    inputs: Mapping = field(default_factory=dict)
    payload: Mapping = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "valid": self.valid,
            "bound": self.bound,
            "value": self.value,
            "margin": self.margin,
            "method": self.method,
            "inputs": dict(self.inputs),
            "payload": dict(self.payload),
        }

    def hash(self) -> str:
        return content_hash(self.to_dict())


def write_json(path: str, obj) -> str:
    """Write canonical JSON (newline-terminated); returns the content hash."""
    text = canonical_json(obj)
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write(text)
        fh.write("\n")
    return hashlib.sha256(text.encode("ascii")).hexdigest()


def read_json(path: str):
    with open(path, "r", encoding="ascii") as fh:
        return json.load(fh)


def write_bundle(directory: str, documents: Mapping) -> dict:
    """Write one JSON per document plus a manifest with content hashes.

    Document values are JSON-able dicts (Certificate instances are
    converted).  Returns the manifest mapping.
    """
    os.makedirs(directory, exist_ok=True)
    hashes = {}
    for name in sorted(documents):
        if "/" in name or name.startswith("."):
            raise CertificateError(f"unsafe document name {name!r}")
        doc = documents[name]
        if isinstance(doc, Certificate):
            doc = doc.to_dict()
        hashes[name] = write_json(os.path.join(directory, f"{name}.json"), doc)
    manifest = {"format": BUNDLE_FORMAT, "files": hashes}
    write_json(os.path.join(directory, MANIFEST_NAME), manifest)
    return manifest


def read_manifest(directory: str) -> dict:
    path = os.path.join(directory, MANIFEST_NAME)
    if not os.path.exists(path):
        raise CertificateError(f"no manifest in {directory}")
    manifest = read_json(path)
    if manifest.get("format") != BUNDLE_FORMAT:
        raise CertificateError(f"unknown bundle format {manifest.get('format')!r}")
    return manifest


def verify_bundle(directory: str) -> dict:
    """Recompute every file hash against the manifest.

    Returns {name: True/False}; a missing file is False.  Raises only
    for a missing or malformed manifest.
    """
    manifest = read_manifest(directory)
    out = {}
    for name, expect in manifest["files"].items():
        path = os.path.join(directory, f"{name}.json")
        if not os.path.exists(path):
            out[name] = False
            continue
        text = canonical_json(read_json(path))
        out[name] = hashlib.sha256(text.encode("ascii")).hexdigest() == expect
    return out


def load_certificate(directory: str, name: str) -> Certificate:
    doc = read_json(os.path.join(directory, f"{name}.json"))
    try:
        return Certificate(
            kind=doc["kind"], valid=doc["valid"], bound=doc["bound"],
            value=doc["value"], margin=doc["margin"], method=doc["method"],
            inputs=doc["inputs"], payload=doc["payload"],
        )
    except KeyError as exc:
        raise CertificateError(f"certificate {name} missing field {exc}")

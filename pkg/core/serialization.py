"""
Torus LSI - Serialization Module
Canonical JSON element files and content digests.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path
from typing import Mapping

from pydantic import BaseModel, ConfigDict, StrictFloat, StrictInt, ValidationError, field_validator

from core.errors import ElementFormatError, PreconditionError
from core.lattice import ThetaParam, TorusElement


def element_to_dict(a: TorusElement) -> dict:
    rational = list(a.theta.rational_approx) if a.theta.rational_approx else None
    return {
        "theta": {"value": a.theta.value, "rational": rational},
        "entries": [
            {"m": m, "n": n, "re": c.real, "im": c.imag}
            for (m, n), c in a
        ],
    }


def dumps(a: TorusElement, indent: int | None = 2) -> str:
    """Serialize with entries in lexicographic (m, n) order."""
    if indent is None:
        return json.dumps(element_to_dict(a), separators=(",", ":"), ensure_ascii=False)
    return json.dumps(element_to_dict(a), indent=indent, ensure_ascii=False) + "\n"


def _short_hash(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()[:16]


def digest(a: TorusElement) -> str:
    """First 16 hex digits of the sha256 of the compact canonical form."""
    return _short_hash(dumps(a, indent=None))


def circle_coefficients_to_dict(coeffs: Mapping[int, complex]) -> dict:
    """Trigonometric polynomial sum f_n e^{2 pi i n t}, entries ordered by n."""
    return {
        "entries": [
            {"n": n, "re": complex(c).real, "im": complex(c).imag}
            for n, c in sorted(coeffs.items())
        ]
    }


def circle_digest(coeffs: Mapping[int, complex]) -> str:
    return _short_hash(json.dumps(circle_coefficients_to_dict(coeffs), separators=(",", ":")))


def _reject_constant(name: str):
    raise ElementFormatError(f"non-finite number {name} in element file")


def _unique_object(pairs: list[tuple[str, object]]) -> dict:
    out = {}
    for key, value in pairs:
        if key in out:
            raise ElementFormatError(f"duplicate key {key!r}")
        out[key] = value
    return out


# ─── Element file schema ────────────────────────────────────────

class ThetaDoc(BaseModel):
    model_config = ConfigDict(extra="forbid", allow_inf_nan=False)

    value: StrictFloat
    rational: tuple[StrictInt, StrictInt] | None = None


class EntryDoc(BaseModel):
    model_config = ConfigDict(extra="forbid", allow_inf_nan=False)

    m: StrictInt
    n: StrictInt
    re: StrictFloat
    im: StrictFloat


class ElementDoc(BaseModel):
    model_config = ConfigDict(extra="forbid")

    theta: ThetaDoc
    entries: list[EntryDoc]

    @field_validator("entries")
    @classmethod
    def _distinct_modes(cls, entries: list[EntryDoc]) -> list[EntryDoc]:
        seen = set()
        for e in entries:
            if (e.m, e.n) in seen:
                raise ValueError(f"duplicate mode {(e.m, e.n)}")
            seen.add((e.m, e.n))
        return entries


def element_from_dict(doc: dict) -> TorusElement:
    try:
        parsed = ElementDoc.model_validate(doc)
    except ValidationError as e:
        raise ElementFormatError(f"malformed element file: {e}") from e
    try:
        theta = ThetaParam(parsed.theta.value, parsed.theta.rational)
    except PreconditionError as e:
        raise ElementFormatError(f"invalid theta: {e}") from e
    return TorusElement(theta, {(e.m, e.n): complex(e.re, e.im) for e in parsed.entries})


def loads(text: str) -> TorusElement:
    try:
        doc = json.loads(text, object_pairs_hook=_unique_object, parse_constant=_reject_constant)
    except json.JSONDecodeError as e:
        raise ElementFormatError(f"invalid JSON: {e}") from e
    return element_from_dict(doc)


def save_element(a: TorusElement, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(dumps(a))
    return path


def load_element(path: str | Path) -> TorusElement:
    with open(path, "r", encoding="utf-8") as f:
        return loads(f.read())

"""P-tag format language: validation, ordering keys, segmentation, conversion.

The closed set of built-in formats::

    {"type": "text"}
    {"type": "enum", "values": ["A", "P", "D", "I"]}
    {"type": "integer"}                      ordered
    {"type": "decimal"}                      ordered
    {"type": "date", "pattern": "YYYY-MM-DD"}  ordered; YYYY/MM/DD tokens
    {"type": "segments", "separator": "-",
     "segments": [{"name": "NPA", "width": 3, "class": "digit"}, ...]}
    {"type": "pattern", "pattern": "999-999-9999"}
        9 digit, A letter, X letter-or-digit, \\c literal c

A P-tag only constrains data space; nothing here touches WIDs.
"""

from __future__ import annotations

import re
from datetime import date
from decimal import Decimal, InvalidOperation
from typing import Callable, Optional

from . import errors

ORDERED_TYPES = frozenset({"integer", "decimal", "date"})
FORMAT_TYPES = frozenset({"text", "enum", "integer", "decimal", "date", "segments", "pattern"})

_CLASSES = {"digit": r"[0-9]", "alpha": r"[A-Za-z]", "alnum": r"[A-Za-z0-9]", "any": r"."}
_DATE_TOKENS = re.compile(r"YYYY|MM|DD")


def check_spec(spec: dict) -> dict:
    kind = spec.get("type")
    if kind not in FORMAT_TYPES:
        raise errors.FormatRejected(f"unknown P-tag format type {kind!r}")
    if kind == "enum" and not spec.get("values"):
        raise errors.FormatRejected("enum format needs values")
    if kind == "date" and not _DATE_TOKENS.search(spec.get("pattern", "")):
        raise errors.FormatRejected("date format needs a pattern with YYYY/MM/DD")
    if kind == "segments" and not spec.get("segments"):
        raise errors.FormatRejected("segments format needs segments")
    if kind == "pattern" and "pattern" not in spec:
        raise errors.FormatRejected("pattern format needs a pattern")
    return spec


def is_ordered(spec: Optional[dict]) -> bool:
    return bool(spec) and spec.get("type") in ORDERED_TYPES


def _date_regex(pattern: str) -> re.Pattern:
    out, pos = [], 0
    for m in _DATE_TOKENS.finditer(pattern):
        out.append(re.escape(pattern[pos:m.start()]))
        width = 4 if m.group() == "YYYY" else 2
        out.append(f"(?P<{m.group()}>[0-9]{{{width}}})")
        pos = m.end()
    out.append(re.escape(pattern[pos:]))
    return re.compile("".join(out) + r"\Z")


def _segments_regex(spec: dict) -> re.Pattern:
    sep = re.escape(spec.get("separator", ""))
    parts = []
    for seg in spec["segments"]:
        cls = _CLASSES[seg.get("class", "any")]
        width = seg.get("width")
        parts.append(f"({cls}{{{width}}})" if width else f"({cls}+?)")
    return re.compile(sep.join(parts) + r"\Z")


def _pattern_regex(pattern: str) -> re.Pattern:
    out, i = [], 0
    while i < len(pattern):
        ch = pattern[i]
        if ch == "\\" and i + 1 < len(pattern):
            out.append(re.escape(pattern[i + 1]))
            i += 2
            continue
        out.append({"9": "[0-9]", "A": "[A-Za-z]", "X": "[A-Za-z0-9]"}.get(ch, re.escape(ch)))
        i += 1
    return re.compile("".join(out) + r"\Z")


def _parse_date(spec: dict, value: str) -> Optional[date]:
    m = _date_regex(spec["pattern"]).match(value)
    if not m:
        return None
    try:
        return date(int(m.group("YYYY")), int(m.group("MM")), int(m.group("DD")))
    except (ValueError, IndexError):
        return None


def conforms(spec: dict, value: Optional[str]) -> bool:
    if value is None:
        return True
    kind = spec["type"]
    if kind == "text":
        return True
    if kind == "enum":
        return value in spec["values"]
    if kind == "integer":
        return re.fullmatch(r"[+-]?[0-9]+", value) is not None
    if kind == "decimal":
        try:
            Decimal(value)
        except InvalidOperation:
            return False
        return re.fullmatch(r"[+-]?([0-9]+\.?[0-9]*|\.[0-9]+)", value) is not None
    if kind == "date":
        return _parse_date(spec, value) is not None
    if kind == "segments":
        return _segments_regex(spec).match(value) is not None
    if kind == "pattern":
        return _pattern_regex(spec["pattern"]).match(value) is not None
    return False


def order_key(spec: dict, value: str):
    kind = spec["type"]
    if kind == "integer":
        return int(value)
    if kind == "decimal":
        return Decimal(value)
    if kind == "date":
        return _parse_date(spec, value)
    raise errors.QueryTypeError(f"format {kind!r} is not ordered")


def segment(spec: dict, value: str) -> Optional[list[tuple[str, str]]]:
    """Split ``value`` into (segment-name, text) pairs, or None if it does not fit."""
    if spec["type"] != "segments":
        return None
    m = _segments_regex(spec).match(value)
    if not m:
        return None
    return [(seg["name"], m.group(i + 1)) for i, seg in enumerate(spec["segments"])]


# -- converters ------------------------------------------------------------

Converter = Callable[[str, dict, dict], Optional[str]]
CONVERTERS: dict[str, Converter] = {}


def register_converter(name: str, func: Converter) -> None:
    """Register a named conversion routine ``f(value, src_spec, dst_spec)``.

    A converter returns the converted text, or None when it does not handle
    the pair of formats.
    """
    CONVERTERS[name] = func


def _date_to_date(value: str, src: dict, dst: dict) -> Optional[str]:
    if src.get("type") != "date" or dst.get("type") != "date":
        return None
    d = _parse_date(src, value)
    if d is None:
        raise errors.FormatRejected(f"{value!r} does not match {src['pattern']!r}")
    return (dst["pattern"].replace("YYYY", f"{d.year:04d}")
            .replace("MM", f"{d.month:02d}").replace("DD", f"{d.day:02d}"))


def _integer_to_decimal(value: str, src: dict, dst: dict) -> Optional[str]:
    if src.get("type") == "integer" and dst.get("type") == "decimal":
        return str(Decimal(value))
    return None


register_converter("date-pattern", _date_to_date)
register_converter("integer-to-decimal", _integer_to_decimal)

BUILTIN_CONVERTERS = ("date-pattern",)


def convert(value: Optional[str], src: dict, dst: dict, refs: list[str]) -> Optional[str]:
    if value is None:
        return None
    if src == dst:
        return value
    for name in list(BUILTIN_CONVERTERS) + list(refs):
        func = CONVERTERS.get(name)
        if func is None:
            continue
        out = func(value, src, dst)
        if out is not None:
            return out
    raise errors.NoConverter(f"no converter from {src.get('type')} to {dst.get('type')}")

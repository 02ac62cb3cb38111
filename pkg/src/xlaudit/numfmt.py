"""Minimal rendering of numbers through Excel number formats.

Covers fixed decimals, thousands separators, percentages and literal
prefixes/suffixes, which is what comparison output needs. Date formats fall
back to the raw serial.
"""

from __future__ import annotations

import re
from decimal import ROUND_HALF_UP, Decimal

from .model import format_general, is_date_format

_LITERAL = re.compile(r'"([^"]*)"|\\(.)|\[\$([^\]-]*)[^\]]*\]|\[[^\]]*\]|_.|\*.')


def _strip(section: str) -> tuple[str, str, str]:
    """Split a format section into (prefix literal, numeric core, suffix literal)."""
    text, mask = [], []  # mask marks characters that came from literals
    pos = 0
    for m in _LITERAL.finditer(section):
        text.append(section[pos:m.start()])
        mask.extend([False] * (m.start() - pos))
        lit = next((g for g in m.groups() if g is not None), "")
        text.append(lit)
        mask.extend([True] * len(lit))
        pos = m.end()
    text.append(section[pos:])
    mask.extend([False] * (len(section) - pos))
    flat = "".join(text)
    digits = [i for i, ch in enumerate(flat) if ch in "0#?" and not mask[i]]
    if not digits:
        return flat, "", ""
    return flat[:digits[0]], flat[digits[0]:digits[-1] + 1], flat[digits[-1] + 1:]


def format_number(x: float, nf: str | None) -> str:
    if not nf or nf.lower() == "general" or is_date_format(nf):
        return format_general(x)
    sections = nf.split(";")
    section = sections[0]
    negative = x < 0
    if negative and len(sections) > 1 and sections[1]:
        section = sections[1]
        x = -x
    prefix, core, suffix = _strip(section)
    if not core:
        return format_general(x)
    percent = "%" in prefix or "%" in suffix
    value = Decimal(repr(x * 100 if percent else x))
    int_part, _, frac = core.partition(".")
    decimals = sum(ch in "0#?" for ch in frac)
    q = value.quantize(Decimal(1).scaleb(-decimals), rounding=ROUND_HALF_UP)
    body = f"{abs(q):,.{decimals}f}" if "," in int_part else f"{abs(q):.{decimals}f}"
    sign = "-" if q < 0 else ""
    return f"{sign}{prefix}{body}{suffix}".strip()

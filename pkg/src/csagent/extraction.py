"""Pull communities and validator scores out of free-form model replies.

``extract_community`` returns ``None`` for output bias: a reply that gives
code or a procedure instead of a community.
"""
from __future__ import annotations

import re

_FENCE = re.compile(r"```.*?(?:```|\Z)", re.DOTALL)
_INLINE_CODE = re.compile(r"`[^`\n]*`")
_MAPPING = re.compile(r"\{[^{}]*:[^{}]*\}", re.DOTALL)
_CONTRACT = re.compile(
    r"^[\s>*_#-]*community[\s*_]*:[\s*_]*\[(?P<body>[^\]]*)\][\s*_.]*$",
    re.IGNORECASE,
)
_INT_LIST_BODY = re.compile(r"^\s*(?:-?\d+\s*(?:,\s*-?\d+\s*)*)?$")
_BRACKETED = re.compile(r"\[\s*-?\d+(?:\s*,\s*-?\d+)*\s*\]")
_SCORE = re.compile(
    r"score[\s*_]*[:=][\s*_]*(?P<value>[-+]?\d+(?:\.\d+)?)", re.IGNORECASE
)


def _prose(text: str) -> str:
    text = _FENCE.sub("\n", text)
    text = _INLINE_CODE.sub(" ", text)
    return text


def _ids(body: str, n: int) -> frozenset | None:
    ids = frozenset(v for v in (int(t) for t in re.findall(r"-?\d+", body)) if 0 <= v < n)
    return ids or None


def extract_community(text: str, n: int) -> frozenset | None:
    """Community named in ``text``, or None when the reply shows output bias.

    The last ``Community: [...]`` line wins; failing that, the last bracketed
    integer list outside code and mappings. Ids outside ``[0, n)`` are dropped;
    an empty result counts as bias.
    """
    if not text:
        return None
    prose = _prose(text)
    for line in reversed(prose.splitlines()):
        m = _CONTRACT.match(line.strip())
        if m and _INT_LIST_BODY.match(m["body"]):
            return _ids(m["body"], n)
    lists = _BRACKETED.findall(_MAPPING.sub(" ", prose))
    if lists:
        return _ids(lists[-1], n)
    return None


def format_community(members) -> str:
    return "Community: [" + ", ".join(str(v) for v in sorted(members)) + "]"


def extract_score(text: str) -> float | None:
    """Last ``Score: x`` in ``text`` clamped to ``[0, 5]``; None if absent."""
    matches = _SCORE.findall(text or "")
    if not matches:
        return None
    return min(5.0, max(0.0, float(matches[-1])))

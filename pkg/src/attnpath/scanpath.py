"""Pseudo-scanpath construction from timed words.

Every token that matches a registry AOI becomes one fixation, in token
order; consecutive same-AOI matches stay separate fixations (revisits are
counted, not merged). Pauses are the positive silent gaps between
consecutive tokens of the *full* stream, matched or not; leading silence
before the first token never counts.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, fields

from .errors import ValidationError
from .registry import AoiRegistry, lookup_word
from .transcript import WordToken


@dataclass(frozen=True)
class Fixation:
    """One pseudo-fixation. Field order here is the JSONL field order."""

    aoi_name: str
    x: float
    y: float
    radius: float
    time_spent_s: float
    time_to_approach_s: float
    visit_index: int
    transition_time_s: float
    cumulative_pause_s: float

    def __post_init__(self):
        if self.time_spent_s <= 0:
            raise ValidationError(f"fixation {self.aoi_name!r}: time_spent {self.time_spent_s} <= 0")
        if self.visit_index < 1:
            raise ValidationError(f"fixation {self.aoi_name!r}: visit_index {self.visit_index} < 1")
        if self.transition_time_s < 0 or self.cumulative_pause_s < 0:
            raise ValidationError(f"fixation {self.aoi_name!r}: negative timing")


FIXATION_FIELDS = tuple(f.name for f in fields(Fixation))


@dataclass(frozen=True)
class Scanpath:
    session_id: str
    fixations: tuple[Fixation, ...]

    def __post_init__(self):
        approaches = [f.time_to_approach_s for f in self.fixations]
        if any(b <= a for a, b in zip(approaches, approaches[1:])):
            raise ValidationError(f"scanpath {self.session_id!r}: fixations not strictly ordered")


def build_scanpath(tokens: list[WordToken], registry: AoiRegistry, session_id: str = "") -> Scanpath:
    """Align a valid token sequence to the registry.

    time_spent = word duration; time_to_approach = word start; transition =
    gap from the previous fixation's end (the first fixation measures from
    t=0, preserving slow-to-first-landmark signal); cumulative_pause = total
    positive inter-token silence up to and including the gap before this
    word. Token non-overlap admits a 1e-6 s tolerance, so transitions are
    clamped at zero.
    """
    fixations: list[Fixation] = []
    pause_acc = 0.0
    prev_token_end: float | None = None
    prev_fix_end: float | None = None
    visits: dict[str, int] = {}

    for tok in tokens:
        if prev_token_end is not None:
            gap = tok.start_s - prev_token_end
            if gap > 0:
                pause_acc += gap
        aoi = lookup_word(registry, tok.word)
        if aoi is not None:
            visit = visits.get(aoi.name, 0) + 1
            visits[aoi.name] = visit
            if prev_fix_end is None:
                transition = tok.start_s
            else:
                transition = max(0.0, tok.start_s - prev_fix_end)
            fixations.append(
                Fixation(
                    aoi_name=aoi.name,
                    x=aoi.x,
                    y=aoi.y,
                    radius=aoi.radius,
                    time_spent_s=tok.duration_s,
                    time_to_approach_s=tok.start_s,
                    visit_index=visit,
                    transition_time_s=transition,
                    cumulative_pause_s=pause_acc,
                )
            )
            prev_fix_end = tok.end_s
        prev_token_end = tok.end_s

    return Scanpath(session_id, tuple(fixations))


def visit_counts(path: Scanpath) -> dict[str, int]:
    """Total fixation count per AOI, keyed in first-visit order."""
    counts: dict[str, int] = {}
    for fix in path.fixations:
        counts[fix.aoi_name] = counts.get(fix.aoi_name, 0) + 1
    return counts


def scanpath_to_jsonl(path: Scanpath) -> str:
    """Debug/golden serialization: one fixation per line, fixed field order,
    floats at 6 decimals."""
    lines = []
    for fix in path.fixations:
        parts = []
        for name in FIXATION_FIELDS:
            value = getattr(fix, name)
            if isinstance(value, float):
                parts.append(f"{json.dumps(name)}: {value:.6f}")
            else:
                parts.append(f"{json.dumps(name)}: {json.dumps(value)}")
        lines.append("{" + ", ".join(parts) + "}")
    return "\n".join(lines) + ("\n" if lines else "")

"""Timed-word (CTM) and session-manifest parsing.

A CTM file is whitespace-separated, one recognized word per line:

    utt_id channel start_s duration_s word [confidence]

Lines starting with ``#`` and blank lines are ignored. Times are decimal
seconds. The manifest is a strict RFC-4180 CSV with the header
``session_id,speaker_id,label,ctm_path``; labels are ``AD`` or ``HC``.

Parsing is all-or-nothing: one malformed line rejects the whole file, so a
partially-read session can never leak downstream.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, replace
from pathlib import Path

from .errors import ParseError, ValidationError

# Tokens may abut within this tolerance; anything closer counts as overlap.
OVERLAP_TOLERANCE_S = 1e-6
# Nudge applied to restore strict ordering when two words share a start time.
TIE_NUDGE_S = 1e-6

MANIFEST_HEADER = ("session_id", "speaker_id", "label", "ctm_path")
LABELS = ("AD", "HC")


def normalize_word(raw: str) -> str:
    """Lowercase and strip surrounding punctuation; interior characters stay.

    "Boy," -> "boy", "mother's" -> "mother's". Locale-free: alphanumeric
    means str.isalnum().
    """
    w = raw.lower()
    start, end = 0, len(w)
    while start < end and not w[start].isalnum():
        start += 1
    while end > start and not w[end - 1].isalnum():
        end -= 1
    return w[start:end]


@dataclass(frozen=True)
class WordToken:
    """One recognized word with its timing."""

    word: str
    start_s: float
    duration_s: float
    confidence: float = 1.0

    def __post_init__(self):
        if not self.word:
            raise ValidationError("token word is empty")
        if self.start_s < 0:
            raise ValidationError(f"token {self.word!r}: start {self.start_s} < 0")
        if self.duration_s <= 0:
            raise ValidationError(f"token {self.word!r}: duration {self.duration_s} <= 0")
        if not 0.0 <= self.confidence <= 1.0:
            raise ValidationError(f"token {self.word!r}: confidence {self.confidence} outside [0, 1]")

    @property
    def end_s(self) -> float:
        return self.start_s + self.duration_s


@dataclass(frozen=True)
class SessionDescriptor:
    """One manifest row: where a session lives and how it is labeled."""

    session_id: str
    speaker_id: str
    label: str
    ctm_path: str


@dataclass
class SessionRecord:
    """A fully loaded session: id, speaker, label and its token sequence."""

    session_id: str
    speaker_id: str
    label: str
    tokens: list[WordToken]

    def __post_init__(self):
        if self.label not in LABELS:
            raise ValidationError(f"session {self.session_id}: label {self.label!r} not in {LABELS}")
        check_token_sequence(self.tokens, self.session_id)


def check_token_sequence(tokens: list[WordToken], context: str = "") -> None:
    """Enforce strict ordering and non-overlap on an already sorted sequence."""
    where = f" in {context}" if context else ""
    for prev, cur in zip(tokens, tokens[1:]):
        if cur.start_s <= prev.start_s:
            raise ValidationError(
                f"tokens not strictly ordered{where}: {prev.word!r}@{prev.start_s} then {cur.word!r}@{cur.start_s}"
            )
        if cur.start_s < prev.end_s - OVERLAP_TOLERANCE_S:
            raise ValidationError(
                f"overlapping tokens{where}: {prev.word!r} ends {prev.end_s:.6f}, {cur.word!r} starts {cur.start_s:.6f}"
            )


def parse_ctm(text: str, session_id: str) -> list[WordToken]:
    """Parse CTM text, keeping only lines whose utt_id equals session_id.

    Every non-comment line is validated whether it is kept or not. Missing
    confidence defaults to 1.0. Output is sorted by start time; exact start
    ties keep file order and the later token is nudged by TIE_NUDGE_S.
    """
    kept: list[WordToken] = []
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        fields = line.split()
        if len(fields) not in (5, 6):
            raise ParseError(f"expected 5 or 6 fields, got {len(fields)}", line_no)
        utt_id, _channel, start_txt, dur_txt, word_raw = fields[:5]
        try:
            start_s = float(start_txt)
            duration_s = float(dur_txt)
            confidence = float(fields[5]) if len(fields) == 6 else 1.0
        except ValueError as exc:
            raise ParseError(f"non-numeric field: {exc}", line_no) from None
        word = normalize_word(word_raw)
        try:
            token = WordToken(word, start_s, duration_s, confidence)
        except ValidationError as exc:
            raise ParseError(str(exc), line_no) from None
        if utt_id == session_id:
            kept.append(token)

    kept.sort(key=lambda t: t.start_s)  # stable: ties keep line order
    for i in range(1, len(kept)):
        if kept[i].start_s <= kept[i - 1].start_s:
            kept[i] = replace(kept[i], start_s=kept[i - 1].start_s + TIE_NUDGE_S)
    check_token_sequence(kept, session_id)
    return kept


def serialize_ctm(tokens: list[WordToken], session_id: str, channel: str = "1") -> str:
    """Inverse of parse_ctm for valid token lists (floats via repr, lossless)."""
    lines = [
        f"{session_id} {channel} {t.start_s!r} {t.duration_s!r} {t.word} {t.confidence!r}"
        for t in tokens
    ]
    return "\n".join(lines) + ("\n" if lines else "")


def parse_manifest(text: str) -> list[SessionDescriptor]:
    """Parse the session manifest CSV into descriptors.

    Rejects unknown labels and duplicate session ids; speaker ids may repeat
    (one speaker, several recordings).
    """
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise ValidationError("manifest is empty; header row required") from None
    if tuple(h.strip() for h in header) != MANIFEST_HEADER:
        raise ValidationError(f"manifest header must be {','.join(MANIFEST_HEADER)}, got {header}")

    out: list[SessionDescriptor] = []
    seen: set[str] = set()
    for row_no, row in enumerate(reader, start=2):
        if not row or (len(row) == 1 and not row[0].strip()):
            continue
        if len(row) != 4:
            raise ValidationError(f"manifest row {row_no}: expected 4 fields, got {len(row)}")
        session_id, speaker_id, label, ctm_path = (field.strip() for field in row)
        if label not in LABELS:
            raise ValidationError(f"manifest row {row_no} ({session_id}): unknown label {label!r}")
        if session_id in seen:
            raise ValidationError(f"manifest row {row_no}: duplicate session_id {session_id!r}")
        seen.add(session_id)
        out.append(SessionDescriptor(session_id, speaker_id, label, ctm_path))
    return out


def load_sessions(manifest_path: str | Path) -> list[SessionRecord]:
    """Read a manifest and every CTM it references (paths relative to it)."""
    manifest_path = Path(manifest_path)
    descriptors = parse_manifest(manifest_path.read_text(encoding="utf-8"))
    base = manifest_path.parent
    sessions = []
    for desc in descriptors:
        ctm_file = Path(desc.ctm_path)
        if not ctm_file.is_absolute():
            ctm_file = base / ctm_file
        try:
            ctm_text = ctm_file.read_text(encoding="utf-8")
        except OSError as exc:
            raise ValidationError(f"session {desc.session_id}: cannot read {ctm_file}: {exc}") from None
        tokens = parse_ctm(ctm_text, desc.session_id)
        sessions.append(SessionRecord(desc.session_id, desc.speaker_id, desc.label, tokens))
    return sessions

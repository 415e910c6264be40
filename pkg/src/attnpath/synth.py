"""Deterministic synthetic picture-description corpus.

Stands in for restricted clinical recordings: emits the exact CTM/manifest
formats the parsers consume, with class contrasts dialed in by three knobs.
HC sessions mention every region plus the tail regions of the registry
(ordered so window/outside come last in the bundled registry); AD sessions
drop regions at ad_visit_drop_prob and stretch every silent gap by
ad_pause_multiplier. All randomness comes from one splitmix64 stream
(see rng.py), consumed in a fixed documented order, so a (spec, registry)
pair always yields a byte-identical corpus.

Timing is generated on a 10 ms grid and printed with two decimals, which
keeps the emitted text exact and the tokens overlap-free by construction.

Draw order per session: one drop draw per region in registry order (AD
sessions only); one shuffle of the visited list; one revisit-count draw
plus one pick per revisit; one lead-in draw; then per region a
filler-count draw, and for every emitted word (fillers first, then the
region word picked from its sorted lemma set) a gap, a duration and a
confidence draw.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import ValidationError
from .registry import Aoi, AoiRegistry
from .rng import SplitMix64

FILLER_WORDS = ("the", "a", "and", "is", "uh", "um", "so", "there")

# 10 ms grid bounds, in centiseconds.
WORD_DUR_CS = (25, 65)
FILLER_DUR_CS = (20, 40)
GAP_CS = (5, 40)
LEAD_IN_CS = (30, 80)


@dataclass(frozen=True)
class CorpusSpec:
    """Size, seed and class-contrast knobs for one synthetic corpus."""

    n_speakers_per_class: int = 20
    sessions_per_speaker: int = 1
    seed: int = 42
    hc_extra_aois: int = 2
    ad_pause_multiplier: float = 3.0
    ad_visit_drop_prob: float = 0.35

    def __post_init__(self):
        if self.n_speakers_per_class < 1:
            raise ValidationError("n_speakers_per_class must be >= 1")
        if self.sessions_per_speaker < 1:
            raise ValidationError("sessions_per_speaker must be >= 1")
        if self.hc_extra_aois < 0:
            raise ValidationError("hc_extra_aois must be >= 0")
        if self.ad_pause_multiplier <= 1.0:
            raise ValidationError("ad_pause_multiplier must be > 1")
        if not 0.0 <= self.ad_visit_drop_prob <= 1.0:
            raise ValidationError("ad_visit_drop_prob must be in [0, 1]")


@dataclass
class SyntheticCorpus:
    """In-memory corpus: manifest text plus {relative path: CTM text}."""

    manifest_text: str
    ctm_files: dict[str, str]


def _emit_word(lines: list[str], session_id: str, rng: SplitMix64, t_cs: int,
               word: str, dur_lo: int, dur_hi: int, gap_scale: float) -> int:
    gap_cs = rng.randint(GAP_CS[1] - GAP_CS[0] + 1) + GAP_CS[0]
    gap_cs = int(round(gap_cs * gap_scale))
    dur_cs = rng.randint(dur_hi - dur_lo + 1) + dur_lo
    conf = (rng.randint(20) + 80) / 100.0
    start_cs = t_cs + gap_cs
    lines.append(f"{session_id} 1 {start_cs / 100:.2f} {dur_cs / 100:.2f} {word} {conf:.2f}")
    return start_cs + dur_cs


def _session_ctm(session_id: str, label: str, spec: CorpusSpec,
                 common: list[Aoi], extra: list[Aoi], rng: SplitMix64,
                 echo: str) -> str:
    visited: list[Aoi] = []
    for aoi in common:
        if label == "AD" and rng.uniform() < spec.ad_visit_drop_prob:
            continue
        visited.append(aoi)
    if label == "HC":
        visited.extend(extra)
    rng.shuffle(visited)

    max_revisits = 3 if label == "HC" else 2
    n_revisits = rng.randint(max_revisits)  # 0..max-1
    for _ in range(n_revisits):
        if visited:
            visited.append(rng.choice(visited))

    gap_scale = spec.ad_pause_multiplier if label == "AD" else 1.0
    lines = [f"# {echo}", f"# session={session_id} label={label}"]
    t_cs = rng.randint(LEAD_IN_CS[1] - LEAD_IN_CS[0] + 1) + LEAD_IN_CS[0]
    for aoi in visited:
        for _ in range(rng.randint(3)):  # 0..2 fillers before the region word
            filler = rng.choice(FILLER_WORDS)
            t_cs = _emit_word(lines, session_id, rng, t_cs, filler,
                              FILLER_DUR_CS[0], FILLER_DUR_CS[1], gap_scale)
        lemma = rng.choice(sorted(aoi.lemmas))
        t_cs = _emit_word(lines, session_id, rng, t_cs, lemma,
                          WORD_DUR_CS[0], WORD_DUR_CS[1], gap_scale)
    return "\n".join(lines) + "\n"


def generate_corpus(spec: CorpusSpec, registry: AoiRegistry, echo: str = "attnpath synth") -> SyntheticCorpus:
    """Build the full corpus for one spec; same inputs, same bytes."""
    if not registry.aois:
        raise ValidationError("cannot synthesize from an empty registry")
    aois = list(registry.aois)
    n_extra = min(spec.hc_extra_aois, len(aois) - 1)
    common = aois[: len(aois) - n_extra]
    extra = aois[len(aois) - n_extra :]

    rng = SplitMix64(spec.seed)
    manifest_lines = ["session_id,speaker_id,label,ctm_path"]
    ctm_files: dict[str, str] = {}
    for label in ("AD", "HC"):
        for sp in range(spec.n_speakers_per_class):
            speaker_id = f"{label.lower()}{sp:02d}"
            for sess in range(spec.sessions_per_speaker):
                session_id = f"{speaker_id}-{sess}"
                rel_path = f"ctm/{session_id}.ctm"
                ctm_files[rel_path] = _session_ctm(session_id, label, spec, common, extra, rng, echo)
                manifest_lines.append(f"{session_id},{speaker_id},{label},{rel_path}")
    return SyntheticCorpus("\n".join(manifest_lines) + "\n", ctm_files)

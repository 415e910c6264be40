"""Picture-region inventory: named circles plus the words that elicit them.

Registry file format (whitespace-separated, ``#`` comments allowed):

    canvas <width_px> <height_px>
    <name> <x> <y> <radius> <lemma1|lemma2|...>

Matching is exact set membership over normalized words; registries
enumerate inflections explicitly (fall|falling|fell) instead of relying on
a stemmer, so alignment results are reproducible. Lemma sets must be
pairwise disjoint so every word maps to at most one region.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import ParseError, ValidationError
from .transcript import normalize_word


@dataclass(frozen=True)
class Aoi:
    """A circular area of interest: geometry plus its eliciting lemmas."""

    name: str
    x: float
    y: float
    radius: float
    lemmas: frozenset[str]

    def __post_init__(self):
        if self.radius <= 0:
            raise ValidationError(f"AOI {self.name!r}: radius {self.radius} must be > 0")
        if not self.lemmas:
            raise ValidationError(f"AOI {self.name!r}: empty lemma set")


@dataclass
class AoiRegistry:
    """Immutable-after-load inventory of AOIs on one canvas."""

    canvas_w: int
    canvas_h: int
    aois: tuple[Aoi, ...]
    _by_lemma: dict[str, Aoi] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.canvas_w <= 0 or self.canvas_h <= 0:
            raise ValidationError(f"canvas {self.canvas_w}x{self.canvas_h} must be positive")
        names = set()
        by_lemma: dict[str, Aoi] = {}
        for aoi in self.aois:
            if aoi.name in names:
                raise ValidationError(f"duplicate AOI name {aoi.name!r}")
            names.add(aoi.name)
            if not (0 <= aoi.x <= self.canvas_w and 0 <= aoi.y <= self.canvas_h):
                raise ValidationError(
                    f"AOI {aoi.name!r}: center ({aoi.x}, {aoi.y}) outside canvas "
                    f"{self.canvas_w}x{self.canvas_h}"
                )
            for lemma in aoi.lemmas:
                other = by_lemma.get(lemma)
                if other is not None:
                    raise ValidationError(
                        f"lemma {lemma!r} claimed by both AOI {other.name!r} and AOI {aoi.name!r}"
                    )
                by_lemma[lemma] = aoi
        self._by_lemma = by_lemma

    @property
    def lemma_union(self) -> frozenset[str]:
        return frozenset(self._by_lemma)


def load_registry(text: str) -> AoiRegistry:
    """Parse and validate a registry file."""
    canvas: tuple[int, int] | None = None
    aois: list[Aoi] = []
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        fields = line.split()
        if canvas is None:
            if fields[0] != "canvas" or len(fields) != 3:
                raise ParseError("first data line must be 'canvas <w> <h>'", line_no)
            try:
                canvas = (int(fields[1]), int(fields[2]))
            except ValueError:
                raise ParseError("canvas dimensions must be integers", line_no) from None
            continue
        if len(fields) != 5:
            raise ParseError(f"expected 'name x y radius lemmas', got {len(fields)} fields", line_no)
        name, x_txt, y_txt, r_txt, lemmas_txt = fields
        try:
            x, y, radius = float(x_txt), float(y_txt), float(r_txt)
        except ValueError:
            raise ParseError(f"non-numeric geometry for AOI {name!r}", line_no) from None
        lemmas = set()
        for raw_lemma in lemmas_txt.split("|"):
            lemma = normalize_word(raw_lemma)
            if not lemma:
                raise ParseError(f"AOI {name!r}: empty lemma in {lemmas_txt!r}", line_no)
            lemmas.add(lemma)
        aois.append(Aoi(name, x, y, radius, frozenset(lemmas)))
    if canvas is None:
        raise ValidationError("registry has no canvas line")
    return AoiRegistry(canvas[0], canvas[1], tuple(aois))


def lookup_word(registry: AoiRegistry, word: str) -> Aoi | None:
    """The unique AOI whose lemma set contains this normalized word, if any."""
    return registry._by_lemma.get(word)


def filter_registry(registry: AoiRegistry, train_vocab: set[str]) -> AoiRegistry:
    """Intersect every lemma set with train_vocab; drop AOIs left empty.

    Geometry is untouched, so a partially covered AOI survives with a
    reduced lemma set. Idempotent for a fixed vocabulary.
    """
    kept = []
    for aoi in registry.aois:
        lemmas = aoi.lemmas & train_vocab
        if lemmas:
            kept.append(Aoi(aoi.name, aoi.x, aoi.y, aoi.radius, frozenset(lemmas)))
    return AoiRegistry(registry.canvas_w, registry.canvas_h, tuple(kept))

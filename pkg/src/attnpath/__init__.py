"""attnpath: pseudo eye-tracking analytics from timestamped speech.

Aligns timed picture-description words to picture regions, derives
gaze-style session features, screens AD vs HC with speaker-independent
cross-validation, and renders scanpath/heatmap figures.
"""

from .errors import AttnpathError, ParseError, ValidationError
from .registry import Aoi, AoiRegistry, filter_registry, load_registry, lookup_word
from .scanpath import Fixation, Scanpath, build_scanpath, visit_counts
from .transcript import (
    SessionDescriptor,
    SessionRecord,
    WordToken,
    load_sessions,
    normalize_word,
    parse_ctm,
    parse_manifest,
    serialize_ctm,
)

__version__ = "0.1.0"

__all__ = [
    "Aoi",
    "AoiRegistry",
    "AttnpathError",
    "Fixation",
    "ParseError",
    "Scanpath",
    "SessionDescriptor",
    "SessionRecord",
    "ValidationError",
    "WordToken",
    "build_scanpath",
    "filter_registry",
    "load_registry",
    "load_sessions",
    "lookup_word",
    "normalize_word",
    "parse_ctm",
    "parse_manifest",
    "serialize_ctm",
    "visit_counts",
]

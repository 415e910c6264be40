"""Session feature extraction: a frozen 68-value descriptor per session.

Layout (order is frozen; changing it breaks every saved CSV):

    positions  0..31   gaze block: per-fixation columns x_coordinate,
                       y_coordinate, radius, time_spent, time_to_approach,
                       number_of_visits, transition_time, pause_length,
                       each summarized as mean, std, min, max
    positions 32..39   word-age block: per-word (aoa_mean, aoa_std) rows,
                       same four summaries
    positions 40..67   embedding block: per-word 7-dim projections of the
                       word vectors, same four summaries

All standard deviations are population (divide by n), never sample; empty
blocks encode as zeros so the classifier always sees finite inputs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ParseError, ValidationError
from .registry import AoiRegistry
from .scanpath import Scanpath, build_scanpath
from .transcript import SessionRecord, WordToken, normalize_word

AOI_FEATURE_NAMES = (
    "x_coordinate",
    "y_coordinate",
    "radius",
    "time_spent",
    "time_to_approach",
    "number_of_visits",
    "transition_time",
    "pause_length",
)
AOA_FEATURE_NAMES = ("aoa_mean", "aoa_std")
STAT_NAMES = ("mean", "std", "min", "max")
WV_COMPONENTS = 7

FEATURE_COLUMNS: tuple[str, ...] = tuple(
    [f"aoi_{feat}_{stat}" for feat in AOI_FEATURE_NAMES for stat in STAT_NAMES]
    + [f"{feat}_{stat}" for feat in AOA_FEATURE_NAMES for stat in STAT_NAMES]
    + [f"wv{i}_{stat}" for i in range(1, WV_COMPONENTS + 1) for stat in STAT_NAMES]
)
N_FEATURES = len(FEATURE_COLUMNS)  # 68

BLOCK_SLICES = {
    "aoi": slice(0, 32),
    "aoa": slice(32, 40),
    "wv": slice(40, 68),
}
ALL_BLOCKS = ("aoi", "aoa", "wv")


def parse_feature_mask(text: str) -> tuple[str, ...]:
    """Parse a mask spec like "all", "aoi" or "aoi+wv" into block names."""
    if text == "all":
        return ALL_BLOCKS
    blocks = tuple(part.strip() for part in text.split("+"))
    for block in blocks:
        if block not in BLOCK_SLICES:
            raise ValidationError(f"unknown feature block {block!r}; use aoi, aoa, wv or all")
    if len(set(blocks)) != len(blocks):
        raise ValidationError(f"repeated block in mask {text!r}")
    return blocks


def mask_column_indices(blocks: tuple[str, ...]) -> np.ndarray:
    """Column indices selected by a mask, in layout order."""
    idx: list[int] = []
    for block in ALL_BLOCKS:
        if block in blocks:
            sl = BLOCK_SLICES[block]
            idx.extend(range(sl.start, sl.stop))
    return np.array(idx, dtype=int)


def summarize_stats(rows: np.ndarray) -> np.ndarray:
    """Per-column (mean, std, min, max) as an (n_cols, 4) array.

    std is population (1/n). An empty matrix summarizes to all zeros.
    """
    rows = np.asarray(rows, dtype=float)
    if rows.ndim != 2:
        raise ValidationError(f"summarize_stats expects a 2-D matrix, got shape {rows.shape}")
    n, c = rows.shape
    if n == 0:
        return np.zeros((c, 4))
    out = np.empty((c, 4))
    out[:, 0] = rows.mean(axis=0)
    out[:, 1] = rows.std(axis=0)
    out[:, 2] = rows.min(axis=0)
    out[:, 3] = rows.max(axis=0)
    return out


def aoi_feature_block(path: Scanpath) -> np.ndarray:
    """32 values: the eight per-fixation columns summarized in layout order."""
    rows = np.array(
        [
            [
                f.x,
                f.y,
                f.radius,
                f.time_spent_s,
                f.time_to_approach_s,
                float(f.visit_index),
                f.transition_time_s,
                f.cumulative_pause_s,
            ]
            for f in path.fixations
        ],
        dtype=float,
    ).reshape(-1, 8)
    return summarize_stats(rows).ravel()


# ---------------------------------------------------------------------------
# Word-level lookup tables
# ---------------------------------------------------------------------------

AoaTable = dict[str, tuple[float, float]]


def load_aoa_table(text: str) -> AoaTable:
    """Load the word-age table: tab/space separated `word mean std` rows."""
    table: AoaTable = {}
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        fields = line.split()
        if len(fields) != 3:
            raise ParseError(f"expected 'word mean std', got {len(fields)} fields", line_no)
        word = normalize_word(fields[0])
        if not word:
            raise ParseError(f"empty word in {raw!r}", line_no)
        try:
            mean_aoa, std_aoa = float(fields[1]), float(fields[2])
        except ValueError:
            raise ParseError(f"non-numeric value for {word!r}", line_no) from None
        if mean_aoa <= 0 or std_aoa < 0:
            raise ParseError(f"{word!r}: need mean > 0 and std >= 0", line_no)
        if word in table:
            raise ParseError(f"duplicate word {word!r}", line_no)
        table[word] = (mean_aoa, std_aoa)
    return table


@dataclass
class WordVectorTable:
    """Word to fixed-dimension embedding map."""

    dim: int
    vectors: dict[str, np.ndarray]


def load_word_vectors(text: str) -> WordVectorTable:
    """Load embeddings in word2vec text format.

    Header line `<count> <dim>`, then one `word v1 .. v<dim>` row per word.
    """
    count = dim = None
    vectors: dict[str, np.ndarray] = {}
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        fields = line.split()
        if dim is None:
            if len(fields) != 2:
                raise ParseError("header line must be '<count> <dim>'", line_no)
            try:
                count, dim = int(fields[0]), int(fields[1])
            except ValueError:
                raise ParseError("header values must be integers", line_no) from None
            if dim < 1:
                raise ParseError(f"dimension {dim} must be >= 1", line_no)
            continue
        if len(fields) != dim + 1:
            raise ParseError(f"expected {dim + 1} fields for word row, got {len(fields)}", line_no)
        word = normalize_word(fields[0])
        if not word:
            raise ParseError(f"empty word in {raw!r}", line_no)
        if word in vectors:
            raise ParseError(f"duplicate word {word!r}", line_no)
        try:
            vectors[word] = np.array([float(v) for v in fields[1:]])
        except ValueError:
            raise ParseError(f"non-numeric vector entry for {word!r}", line_no) from None
    if dim is None:
        raise ValidationError("word-vector file has no header line")
    if count != len(vectors):
        raise ValidationError(f"header declares {count} words, file has {len(vectors)}")
    return WordVectorTable(dim, vectors)


def aoa_feature_block(tokens: list[WordToken], table: AoaTable) -> np.ndarray:
    """8 values: per-occurrence (aoa_mean, aoa_std) rows summarized.

    Words absent from the table are skipped; with nothing matched the block
    is all zeros.
    """
    rows = np.array(
        [table[t.word] for t in tokens if t.word in table], dtype=float
    ).reshape(-1, 2)
    return summarize_stats(rows).ravel()


# ---------------------------------------------------------------------------
# Principal-component reduction of word vectors
# ---------------------------------------------------------------------------


@dataclass
class PcaModel:
    """Mean vector plus top-k principal axes of a vector population.

    components has shape (k, dim); rows past the data rank are zero vectors
    with zero explained variance so projections keep a fixed width.
    """

    mean: np.ndarray
    components: np.ndarray
    explained_variance: np.ndarray

    def transform(self, vector: np.ndarray) -> np.ndarray:
        return (np.asarray(vector, dtype=float) - self.mean) @ self.components.T


def zero_pca(dim: int, k: int = WV_COMPONENTS) -> PcaModel:
    """Degenerate model used when no training vectors exist at all."""
    return PcaModel(np.zeros(dim), np.zeros((k, dim)), np.zeros(k))


def fit_pca(vectors, k: int = WV_COMPONENTS) -> PcaModel:
    """Top-k eigendecomposition of the population covariance matrix.

    Eigenvalues are sorted non-increasing; each component's sign is fixed so
    its largest-magnitude coordinate is positive; eigenvalues below
    1e-12 * largest collapse to zero components.
    """
    X = np.asarray(vectors, dtype=float)
    if X.ndim != 2 or X.shape[0] == 0:
        raise ValidationError("fit_pca needs at least one vector")
    n, dim = X.shape
    mean = X.mean(axis=0)
    centered = X - mean
    cov = centered.T @ centered / n
    evals, evecs = np.linalg.eigh(cov)
    order = np.argsort(evals)[::-1]
    evals = evals[order]
    evecs = evecs[:, order]

    components = np.zeros((k, dim))
    variance = np.zeros(k)
    cutoff = max(evals[0], 0.0) * 1e-12
    for i in range(min(k, dim)):
        if evals[i] <= cutoff:
            break
        comp = evecs[:, i]
        peak = int(np.argmax(np.abs(comp)))
        if comp[peak] < 0:
            comp = -comp
        components[i] = comp
        variance[i] = evals[i]
    return PcaModel(mean, components, variance)


def wv_feature_block(tokens: list[WordToken], table: WordVectorTable, pca: PcaModel) -> np.ndarray:
    """28 values: per-occurrence 7-dim projections summarized."""
    k = pca.components.shape[0]
    rows = np.array(
        [pca.transform(table.vectors[t.word]) for t in tokens if t.word in table.vectors],
        dtype=float,
    ).reshape(-1, k)
    return summarize_stats(rows).ravel()


# ---------------------------------------------------------------------------
# Assembly and CSV output
# ---------------------------------------------------------------------------


@dataclass
class FeatureVector:
    session_id: str
    speaker_id: str
    label: str
    values: np.ndarray

    def __post_init__(self):
        if self.values.shape != (N_FEATURES,):
            raise ValidationError(
                f"feature vector for {self.session_id!r} has shape {self.values.shape}, "
                f"expected ({N_FEATURES},)"
            )


def assemble_feature_vector(
    session: SessionRecord,
    registry: AoiRegistry,
    aoa_table: AoaTable,
    wv_table: WordVectorTable,
    pca: PcaModel,
) -> FeatureVector:
    """Concatenate gaze(32) | word-age(8) | embedding(28) for one session.

    The registry must already be vocabulary-filtered and the PCA fitted;
    both choices belong to the caller (per fold in cross-validation).
    """
    path = build_scanpath(session.tokens, registry, session.session_id)
    values = np.concatenate(
        [
            aoi_feature_block(path),
            aoa_feature_block(session.tokens, aoa_table),
            wv_feature_block(session.tokens, wv_table, pca),
        ]
    )
    return FeatureVector(session.session_id, session.speaker_id, session.label, values)


def feature_csv(feature_vectors: list[FeatureVector], config_echo: str = "") -> str:
    """Serialize vectors to CSV: optional `#` echo line, header, 6-decimal rows."""
    lines = []
    if config_echo:
        lines.append(f"# {config_echo}")
    lines.append("session_id,speaker_id,label," + ",".join(FEATURE_COLUMNS))
    for fv in feature_vectors:
        values = ",".join(f"{v:.6f}" for v in fv.values)
        lines.append(f"{fv.session_id},{fv.speaker_id},{fv.label},{values}")
    return "\n".join(lines) + "\n"

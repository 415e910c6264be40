"""Command-line entry point.

Subcommands: synth, features, cv, scanpath, heatmap, report. Every output
is a plain file with all randomness seeded, so rerunning a command with the
same flags reproduces the same bytes. Exit codes: 0 ok, 2 bad input or
usage, 1 internal error.
"""

from __future__ import annotations

import argparse
import os
import sys
import traceback
from concurrent.futures import ThreadPoolExecutor
from importlib import resources
from pathlib import Path

from . import classifier, features, synth, viz
from .errors import AttnpathError, ValidationError
from .registry import filter_registry, load_registry
from .scanpath import build_scanpath
from .transcript import load_sessions

THREADS_ENV = "ATTNPATH_THREADS"


def _thread_count() -> int:
    raw = os.environ.get(THREADS_ENV, "1")
    try:
        return max(1, int(raw))
    except ValueError:
        raise ValidationError(f"{THREADS_ENV}={raw!r} is not an integer") from None


def _pmap(fn, items):
    """Map preserving input order; parallel only when the env cap allows."""
    workers = _thread_count()
    if workers == 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def _default_asset(name: str) -> Path:
    return Path(str(resources.files("attnpath") / "data" / name))


def _read_text(path: str | Path, what: str) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ValidationError(f"cannot read {what} {path}: {exc}") from None


def _load_inputs(args):
    registry = load_registry(_read_text(args.registry, "registry"))
    sessions = load_sessions(args.manifest)
    aoa = features.load_aoa_table(_read_text(args.aoa, "AoA table"))
    wv = features.load_word_vectors(_read_text(args.wv, "word vectors"))
    return sessions, registry, aoa, wv


def _echo(args, names: list[str]) -> str:
    parts = [f"attnpath {args.command}"]
    parts += [f"{n.replace('_', '-')}={getattr(args, n)}" for n in names]
    return " ".join(parts)


def _write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------


def cmd_synth(args) -> int:
    registry = load_registry(_read_text(args.registry, "registry"))
    spec = synth.CorpusSpec(
        n_speakers_per_class=args.speakers,
        sessions_per_speaker=args.sessions,
        seed=args.seed,
        hc_extra_aois=args.hc_extra_aois,
        ad_pause_multiplier=args.ad_pause_multiplier,
        ad_visit_drop_prob=args.ad_visit_drop_prob,
    )
    echo = _echo(args, ["speakers", "sessions", "seed", "hc_extra_aois",
                        "ad_pause_multiplier", "ad_visit_drop_prob"])
    corpus = synth.generate_corpus(spec, registry, echo)
    out = Path(args.out)
    _write(out / "manifest.csv", corpus.manifest_text)
    for rel_path, text in corpus.ctm_files.items():
        _write(out / rel_path, text)
    print(f"wrote {len(corpus.ctm_files)} sessions under {out}")
    return 0


def _corpus_feature_vectors(sessions, registry, aoa, wv):
    """Whole-corpus extraction (no folds): filter and fit on all transcripts."""
    vocab = {tok.word for s in sessions for tok in s.tokens}
    filtered = filter_registry(registry, vocab)
    covered = sorted(w for w in vocab if w in wv.vectors)
    if covered:
        pca = features.fit_pca([wv.vectors[w] for w in covered], features.WV_COMPONENTS)
    else:
        pca = features.zero_pca(wv.dim, features.WV_COMPONENTS)
    return _pmap(lambda s: features.assemble_feature_vector(s, filtered, aoa, wv, pca), sessions)


def cmd_features(args) -> int:
    sessions, registry, aoa, wv = _load_inputs(args)
    vectors = _corpus_feature_vectors(sessions, registry, aoa, wv)
    _write(Path(args.out), features.feature_csv(vectors, _echo(args, [])))
    print(f"wrote {len(vectors)} feature rows to {args.out}")
    return 0


def _run_cv(args, sessions, registry, aoa, wv, mask):
    return classifier.run_cross_validation(
        sessions, registry, aoa, wv,
        k=args.k, seed=args.seed, lam=args.lam,
        mask=mask, average=args.averaging,
        max_iter=args.max_iter, tol=args.tol,
    )


def cmd_cv(args) -> int:
    sessions, registry, aoa, wv = _load_inputs(args)
    mask = features.parse_feature_mask(args.mask)
    result = _run_cv(args, sessions, registry, aoa, wv, mask)
    config = {
        "k": args.k,
        "seed": args.seed,
        "lambda": args.lam,
        "mask": args.mask,
        "averaging": args.averaging,
    }
    _write(Path(args.out), classifier.metrics_json(result, config))
    m = result.metrics
    print(f"accuracy {m.accuracy:.6f}  recall {m.recall:.6f}  "
          f"precision {m.precision:.6f}  f1 {m.f1:.6f}")
    return 0


def cmd_scanpath(args) -> int:
    registry = load_registry(_read_text(args.registry, "registry"))
    sessions = load_sessions(args.manifest)
    style = viz.ScanpathStyle(background=args.background)
    out = Path(args.out)

    def render(session):
        path = build_scanpath(session.tokens, registry, session.session_id)
        return session.session_id, viz.render_scanpath_svg(path, registry, style)

    for session_id, svg in _pmap(render, sessions):
        _write(out / f"{session_id}.scanpath.svg", svg)
    print(f"wrote {len(sessions)} scanpath SVGs under {out}")
    return 0


def cmd_heatmap(args) -> int:
    registry = load_registry(_read_text(args.registry, "registry"))
    sessions = load_sessions(args.manifest)
    echo = _echo(args, ["group_by", "cell_size", "sigma_scale"])

    groups: dict[str, list] = {}
    for session in sessions:
        key = session.label if args.group_by == "label" else session.session_id
        groups.setdefault(key, []).append(session)

    out = Path(args.out)
    grids = {}
    for key in sorted(groups):
        paths = [build_scanpath(s.tokens, registry, s.session_id) for s in groups[key]]
        grid = viz.accumulate_heatmap(paths, registry, args.cell_size, args.sigma_scale)
        grids[key] = grid
        _write(out / f"{key}.heat.pgm", viz.heatgrid_to_pgm(grid, f"{echo} group={key}"))

    keys = sorted(grids)
    if len(keys) == 2:
        a, b = keys
        diff = viz.diff_heatmap(grids[a], grids[b])
        pos, neg = viz.signed_heatgrid_to_pgms(diff, f"{echo} diff={a}-minus-{b}")
        _write(out / f"{a}-minus-{b}.pos.pgm", pos)
        _write(out / f"{a}-minus-{b}.neg.pgm", neg)
    print(f"wrote {len(keys)} group heatmaps under {out}")
    return 0


def cmd_report(args) -> int:
    sessions, registry, aoa, wv = _load_inputs(args)
    mask_specs = [m.strip() for m in args.masks.split(",") if m.strip()]
    if not mask_specs:
        raise ValidationError("--masks selected nothing")

    rows = []
    for mask_spec in mask_specs:
        mask = features.parse_feature_mask(mask_spec)
        result = _run_cv(args, sessions, registry, aoa, wv, mask)
        rows.append((mask_spec, result.metrics))

    lines = [f"# {_echo(args, ['k', 'seed', 'lam', 'averaging', 'masks'])}"]
    lines.append(f"{'mask':<12} {'accuracy':>10} {'recall':>10} {'precision':>10} {'f1':>10}")
    for mask_spec, m in rows:
        lines.append(
            f"{mask_spec:<12} {m.accuracy:>10.6f} {m.recall:>10.6f} {m.precision:>10.6f} {m.f1:>10.6f}"
        )
    text = "\n".join(lines) + "\n"
    _write(Path(args.out), text)
    print(text, end="")
    return 0


# ---------------------------------------------------------------------------
# Argument parsing
# ---------------------------------------------------------------------------


def _add_table_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--aoa", default=str(_default_asset("aoa.tsv")),
                   help="word age-of-acquisition table (default: bundled)")
    p.add_argument("--wv", default=str(_default_asset("vectors.txt")),
                   help="word-vector table (default: bundled)")


def _add_cv_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--k", type=int, default=10, help="number of folds")
    p.add_argument("--seed", type=int, default=42, help="fold-shuffle seed")
    p.add_argument("--lam", type=float, default=1.0, metavar="LAMBDA",
                   help="L2 regularization strength")
    p.add_argument("--max-iter", type=int, default=1000, dest="max_iter")
    p.add_argument("--tol", type=float, default=1e-6)
    p.add_argument("--averaging", choices=("macro", "weighted"), default="macro")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="attnpath",
        description="Pseudo eye-tracking analytics from timestamped picture-description speech.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic corpus")
    p.add_argument("--registry", default=str(_default_asset("registry.tsv")))
    p.add_argument("--out", required=True, help="output corpus directory")
    p.add_argument("--speakers", type=int, default=20, help="speakers per class")
    p.add_argument("--sessions", type=int, default=1, help="sessions per speaker")
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--hc-extra-aois", type=int, default=2, dest="hc_extra_aois")
    p.add_argument("--ad-pause-multiplier", type=float, default=3.0, dest="ad_pause_multiplier")
    p.add_argument("--ad-visit-drop-prob", type=float, default=0.35, dest="ad_visit_drop_prob")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("features", help="extract the 68-column feature CSV")
    p.add_argument("--manifest", required=True)
    p.add_argument("--registry", default=str(_default_asset("registry.tsv")))
    _add_table_flags(p)
    p.add_argument("--out", required=True, help="output CSV path")
    p.set_defaults(func=cmd_features)

    p = sub.add_parser("cv", help="speaker-independent cross-validation")
    p.add_argument("--manifest", required=True)
    p.add_argument("--registry", default=str(_default_asset("registry.tsv")))
    _add_table_flags(p)
    _add_cv_flags(p)
    p.add_argument("--mask", default="all", help="feature blocks: all, aoi, aoa, wv, aoi+wv, ...")
    p.add_argument("--out", required=True, help="output metrics JSON path")
    p.set_defaults(func=cmd_cv)

    p = sub.add_parser("scanpath", help="render per-session scanpath SVGs")
    p.add_argument("--manifest", required=True)
    p.add_argument("--registry", default=str(_default_asset("registry.tsv")))
    p.add_argument("--background", default=None, help="optional background image reference")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_scanpath)

    p = sub.add_parser("heatmap", help="render group and difference heatmaps")
    p.add_argument("--manifest", required=True)
    p.add_argument("--registry", default=str(_default_asset("registry.tsv")))
    p.add_argument("--group-by", choices=("label", "session"), default="label", dest="group_by")
    p.add_argument("--cell-size", type=float, default=5.0, dest="cell_size")
    p.add_argument("--sigma-scale", type=float, default=0.5, dest="sigma_scale")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_heatmap)

    p = sub.add_parser("report", help="run the feature-family ablation table")
    p.add_argument("--manifest", required=True)
    p.add_argument("--registry", default=str(_default_asset("registry.tsv")))
    _add_table_flags(p)
    _add_cv_flags(p)
    p.add_argument("--masks", default="aoi,aoa,wv,all",
                   help="comma-separated mask list, one table row each")
    p.add_argument("--out", required=True, help="output text path")
    p.set_defaults(func=cmd_report)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except AttnpathError as exc:
        print(f"attnpath {args.command}: error: {exc}", file=sys.stderr)
        return 2
    except Exception:
        traceback.print_exc()
        return 1


if __name__ == "__main__":
    sys.exit(main())

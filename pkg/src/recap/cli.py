"""Batch interface: ``recap process``, ``recap bench-seg``, ``recap serve``.

stdout carries only the requested artifact; diagnostics go to stderr.
Exit codes: 2 parse/usage error, 3 backend failure, 4 empty transcript.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .backend import BackendFailure, HttpBackend, StubBackend
from .config import AppConfig, load_config
from .pipeline import run_pipeline
from .recapdoc import document_to_json, render_markdown
from .segmentation import LexicalCohesionScorer, evaluate_segmentation, segment_transcript
from .transcript import EmptyTranscript, MalformedInput, parse_transcript

EXIT_PARSE_ERROR = 2
EXIT_BACKEND_FAILURE = 3
EXIT_EMPTY_TRANSCRIPT = 4

_FORMAT_ALIASES = {"plain": "plain_speaker", "srt": "srt", "vtt": "webvtt"}


def _fail(code: int, message: str) -> int:
    print(f"recap: {message}", file=sys.stderr)
    return code


def _make_backend(kind: str, config: AppConfig):
    if kind == "http":
        return HttpBackend(config.backend_policy)
    return StubBackend()


def cmd_process(args: argparse.Namespace) -> int:
    path = Path(args.file)
    if not path.is_file():
        return _fail(EXIT_PARSE_ERROR, f"no such file: {path}")
    config = load_config(args.config)
    fmt = _FORMAT_ALIASES.get(args.format) if args.format else None
    try:
        transcript = parse_transcript(path.read_bytes(), format_hint=fmt, meeting_id=path.stem)
    except EmptyTranscript as exc:
        return _fail(EXIT_EMPTY_TRANSCRIPT, f"empty transcript: {exc}")
    except MalformedInput as exc:
        return _fail(EXIT_PARSE_ERROR, f"cannot parse transcript: {exc}")
    backend = _make_backend(args.backend, config)
    try:
        doc = run_pipeline(transcript, backend, config.pipeline)
    except BackendFailure as exc:
        return _fail(EXIT_BACKEND_FAILURE, f"backend failure ({exc.kind}): {exc}")
    if args.out == "markdown":
        sys.stdout.write(render_markdown(doc, view=args.view))
    else:
        projection = document_to_json(doc)
        if args.view == "highlights":
            projection.pop("chapters")
        elif args.view == "hierarchical":
            projection.pop("highlights")
        sys.stdout.write(json.dumps(projection, sort_keys=True, indent=2, ensure_ascii=False) + "\n")
    return 0


def _load_corpus(corpus_dir: Path) -> list[tuple[str, Path, list[int]]]:
    entries = []
    for gold_path in sorted(corpus_dir.glob("*.gold.json")):
        stem = gold_path.name[: -len(".gold.json")]
        transcript_path = None
        for ext in (".txt", ".vtt", ".srt"):
            candidate = corpus_dir / f"{stem}{ext}"
            if candidate.is_file():
                transcript_path = candidate
                break
        if transcript_path is None:
            raise ValueError(f"gold file {gold_path.name} has no matching transcript")
        gold = json.loads(gold_path.read_text(encoding="utf-8"))
        boundaries = gold.get("boundaries")
        if not isinstance(boundaries, list) or not boundaries or boundaries[0] != 0:
            raise ValueError(f"{gold_path.name}: boundaries must be a list starting at 0")
        entries.append((stem, transcript_path, [int(b) for b in boundaries]))
    return entries


def _boundaries_to_segments(boundaries: list[int], n: int) -> list[tuple[int, int]]:
    ordered = sorted(set(boundaries))
    return [
        (b, (ordered[i + 1] - 1) if i + 1 < len(ordered) else n - 1)
        for i, b in enumerate(ordered)
    ]


def cmd_bench_seg(args: argparse.Namespace) -> int:
    corpus_dir = Path(args.corpus_dir)
    if not corpus_dir.is_dir():
        return _fail(EXIT_PARSE_ERROR, f"no such directory: {corpus_dir}")
    config = load_config(args.config)
    try:
        corpus = _load_corpus(corpus_dir)
    except (ValueError, json.JSONDecodeError) as exc:
        return _fail(EXIT_PARSE_ERROR, f"malformed corpus: {exc}")
    if not corpus:
        return _fail(EXIT_PARSE_ERROR, f"no transcript+gold pairs in {corpus_dir}")
    rows = []
    for stem, transcript_path, boundaries in corpus:
        try:
            transcript = parse_transcript(transcript_path.read_bytes(), meeting_id=stem)
        except (MalformedInput, EmptyTranscript) as exc:
            return _fail(EXIT_PARSE_ERROR, f"{transcript_path.name}: {exc}")
        if max(boundaries) >= len(transcript):
            return _fail(
                EXIT_PARSE_ERROR,
                f"malformed corpus: {stem} gold boundary {max(boundaries)} outside "
                f"transcript of {len(transcript)} utterances",
            )
        predicted = segment_transcript(
            transcript,
            config.pipeline.segmentation,
            LexicalCohesionScorer(config.pipeline.cohesion_block_utterances),
        )
        gold = _boundaries_to_segments(boundaries, len(transcript))
        metrics = evaluate_segmentation(predicted, gold)
        rows.append({"file": stem, "pk": metrics["pk"], "window_diff": metrics["window_diff"]})
    mean_pk = sum(r["pk"] for r in rows) / len(rows)
    mean_wd = sum(r["window_diff"] for r in rows) / len(rows)
    if args.out == "json":
        report = {"files": rows, "mean_pk": mean_pk, "mean_window_diff": mean_wd}
        sys.stdout.write(json.dumps(report, sort_keys=True, indent=2) + "\n")
    else:
        width = max(len(r["file"]) for r in rows)
        sys.stdout.write(f"{'file'.ljust(width)}  {'pk':>8}  {'windiff':>8}\n")
        for r in rows:
            sys.stdout.write(f"{r['file'].ljust(width)}  {r['pk']:8.4f}  {r['window_diff']:8.4f}\n")
        sys.stdout.write(f"{'mean'.ljust(width)}  {mean_pk:8.4f}  {mean_wd:8.4f}\n")
    return 0


def cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from .service import create_app

    config = load_config(args.config)
    app = create_app(config)
    uvicorn.run(app, host=args.host or config.host, port=args.port or config.port)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="recap", description="Meeting recap pipeline")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("process", help="generate a recap from a transcript file")
    p.add_argument("file")
    p.add_argument("--format", choices=["plain", "srt", "vtt"], default=None)
    p.add_argument("--view", choices=["highlights", "hierarchical", "both"], default="both")
    p.add_argument("--out", choices=["json", "markdown"], default="json")
    p.add_argument("--backend", choices=["stub", "http"], default="stub")
    p.add_argument("--config", default=None)
    p.set_defaults(func=cmd_process)

    p = sub.add_parser("bench-seg", help="run Pk/WindowDiff over a transcript+gold corpus")
    p.add_argument("corpus_dir")
    p.add_argument("--out", choices=["table", "json"], default="table")
    p.add_argument("--config", default=None)
    p.set_defaults(func=cmd_bench_seg)

    p = sub.add_parser("serve", help="start the HTTP service")
    p.add_argument("--config", default=None)
    p.add_argument("--host", default=None)
    p.add_argument("--port", type=int, default=None)
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())

"""Analysis command line: replay logs, per-suggestion metrics, aggregates.

    writetrace replay --log PATH [--at SEQ]
    writetrace metrics --in EXPORT... [--embedder reference|service] --out CSV
    writetrace aggregate --in EXPORT... --out CSV [--bins N]

Inputs to `metrics` and `aggregate` are session export files (JSON documents
as produced by GET /sessions/{id}/export, saved to disk). Exit codes:
0 success, 1 partial failure (some inputs unusable), 2 invalid invocation.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

from .embedders import HttpServiceEmbedder
from .events import EditEvent, EventKind, LogFormatError, ReplayError, parse_log, read_log, replay
from .metrics import Embedder, RewriteMetrics, suggestion_metrics
from .provenance import OriginKind
from .suggestions import SuggestionRecord

CSV_HEADER = [
    "session_id",
    "suggestion_id",
    "kind",
    "words_remaining",
    "embedding_similarity",
    "edit_count",
    "segment_count",
]


def fmt_real(value: Optional[float]) -> str:
    """Reals render with 6 significant digits and a '.' separator."""
    if value is None:
        return ""
    return f"{value:.6g}"


# ---------------------------------------------------------------------------
# replay
# ---------------------------------------------------------------------------


def render_annotated(buffer) -> str:
    """Document text with AI spans delimited and tagged by suggestion id."""
    parts = []
    offset = 0
    for origin, n in buffer.runs:
        chunk = buffer.text[offset : offset + n]
        offset += n
        if origin.kind is OriginKind.AI:
            parts.append(f"[[ai:{origin.suggestion_id}]]{chunk}[[/ai]]")
        else:
            parts.append(chunk)
    return "".join(parts)


def cmd_replay(args: argparse.Namespace) -> int:
    try:
        events = read_log(args.log)
    except OSError as exc:
        print(f"error: cannot read {args.log}: {exc}", file=sys.stderr)
        return 1
    except LogFormatError as exc:
        print(f"error: {args.log}: {exc}", file=sys.stderr)
        return 1
    try:
        buffer = replay(events, upto_seq=args.at)
    except ReplayError as exc:
        print(f"error: {args.log}: replay failed at seq {exc.seq}: {exc}", file=sys.stderr)
        return 1
    print(render_annotated(buffer))
    return 0


# ---------------------------------------------------------------------------
# metrics / aggregate
# ---------------------------------------------------------------------------


class ExportError(ValueError):
    pass


def load_export(path: Path) -> tuple[str, list[EditEvent], dict[str, SuggestionRecord]]:
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
        session_id = doc["session_id"]
        events = parse_log(doc["log"])
        records = {
            r["suggestion_id"]: SuggestionRecord.from_dict(r)
            for r in doc.get("suggestions", [])
        }
    except (OSError, json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        raise ExportError(f"{path}: not a usable session export: {exc}") from exc
    return session_id, events, records


def export_metrics(
    session_id: str,
    events: Sequence[EditEvent],
    records: dict[str, SuggestionRecord],
    embedder: Optional[Embedder],
) -> list[tuple[int, str, RewriteMetrics]]:
    """(insertion seq, session_id, metrics) per inserted suggestion."""
    final_buffer = replay(events)
    rows = []
    for event in events:
        if event.kind is not EventKind.SUGGESTION_INSERTED:
            continue
        record = records.get(event.suggestion_id) or SuggestionRecord(
            suggestion_id=event.suggestion_id,
            kind=None,
            context_text="",
            final_text=event.text,
            created_at_ms=event.timestamp_ms,
        )
        rows.append(
            (event.seq, session_id, suggestion_metrics(events, final_buffer, record, embedder))
        )
    return rows


def choose_embedder(name: str) -> Optional[Embedder]:
    if name == "service":
        return HttpServiceEmbedder.from_env()
    return None  # metrics default: the reference trigram embedder


def collect_rows(
    paths: Iterable[Path], embedder: Optional[Embedder]
) -> tuple[list[tuple[str, int, RewriteMetrics]], int]:
    rows: list[tuple[str, int, RewriteMetrics]] = []
    failures = 0
    for path in paths:
        try:
            session_id, events, records = load_export(Path(path))
            for seq, sid, metrics in export_metrics(session_id, events, records, embedder):
                rows.append((sid, seq, metrics))
        except Exception as exc:
            print(f"error: {path}: {exc}", file=sys.stderr)
            failures += 1
    rows.sort(key=lambda r: (r[0], r[1]))
    return rows, failures


def _open_out(path: str):
    try:
        return open(path, "w", encoding="utf-8", newline="")
    except OSError as exc:
        print(f"error: cannot write {path}: {exc}", file=sys.stderr)
        return None


def cmd_metrics(args: argparse.Namespace) -> int:
    try:
        embedder = choose_embedder(args.embedder)
    except Exception as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    rows, failures = collect_rows(args.inputs, embedder)
    out = _open_out(args.out)
    if out is None:
        return 2
    with out:
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        for session_id, _seq, m in rows:
            writer.writerow([
                session_id,
                m.suggestion_id,
                m.kind.value if m.kind else "unknown",
                fmt_real(m.words_remaining),
                fmt_real(m.embedding_similarity),
                m.edit_count,
                m.segment_count,
            ])
    return 1 if failures else 0


def _histogram(values: Sequence[float], bins: int, lo: float, hi: float) -> list[tuple[str, int]]:
    counts, edges = np.histogram(np.asarray(values, dtype=float), bins=bins, range=(lo, hi))
    return [
        (f"{edges[i]:.2f}..{edges[i + 1]:.2f}", int(counts[i]))
        for i in range(len(counts))
    ]


def aggregate_rows(metrics: Sequence[RewriteMetrics], kind: str, bins: int) -> list[list]:
    rows: list[list] = []
    n = len(metrics)
    rows.append([kind, "suggestions", "count", n])
    wr = [m.words_remaining for m in metrics]
    rows.append([kind, "words_remaining", "mean", fmt_real(sum(wr) / n)])
    sims = [m.embedding_similarity for m in metrics if m.embedding_similarity is not None]
    rows.append(
        [kind, "embedding_similarity", "mean",
         fmt_real(sum(sims) / len(sims)) if sims else ""]
    )
    edits = [m.edit_count for m in metrics]
    rows.append([kind, "edit_count", "mean", fmt_real(sum(edits) / n)])
    segs = [m.segment_count for m in metrics]
    rows.append([kind, "segment_count", "mean", fmt_real(sum(segs) / n)])

    for label, count in _histogram(wr, bins, 0.0, 1.0):
        rows.append([kind, "words_remaining_hist", label, count])
    if sims:
        for label, count in _histogram(sims, bins, -1.0, 1.0):
            rows.append([kind, "embedding_similarity_hist", label, count])
    hi = max(edits) + 1
    for label, count in _histogram(edits, bins, 0.0, float(hi)):
        rows.append([kind, "edit_count_hist", label, count])
    for value in sorted(set(segs)):
        rows.append([kind, "segment_count_dist", str(value), segs.count(value)])

    kept = [m for m in metrics if m.segment_count >= 1]
    low = [m for m in kept if m.segment_count <= 5]
    share = fmt_real(len(low) / len(kept)) if kept else ""
    rows.append([kind, "kept_low_segment_share", "value", share])
    return rows


def cmd_aggregate(args: argparse.Namespace) -> int:
    try:
        embedder = choose_embedder(args.embedder)
    except Exception as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    rows, failures = collect_rows(args.inputs, embedder)
    per_kind: dict[str, list[RewriteMetrics]] = {}
    everything: list[RewriteMetrics] = []
    for _sid, _seq, m in rows:
        everything.append(m)
        per_kind.setdefault(m.kind.value if m.kind else "unknown", []).append(m)

    out = _open_out(args.out)
    if out is None:
        return 2
    with out:
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(["kind", "metric", "stat", "value"])
        if everything:
            for row in aggregate_rows(everything, "all", args.bins):
                writer.writerow(row)
            for kind in sorted(per_kind):
                for row in aggregate_rows(per_kind[kind], kind, args.bins):
                    writer.writerow(row)
    return 1 if failures else 0


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="writetrace", description="Replay and analyze writing-session logs"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_replay = sub.add_parser("replay", help="print a replayed document with AI spans marked")
    p_replay.add_argument("--log", required=True, help="event log file (.jsonl)")
    p_replay.add_argument("--at", type=int, default=None, help="replay up to this seq")
    p_replay.set_defaults(func=cmd_replay)

    p_metrics = sub.add_parser("metrics", help="per-suggestion metrics CSV")
    p_metrics.add_argument("--in", dest="inputs", nargs="+", required=True,
                           help="session export files")
    p_metrics.add_argument("--embedder", choices=["reference", "service"],
                           default="reference")
    p_metrics.add_argument("--out", required=True, help="output CSV path")
    p_metrics.set_defaults(func=cmd_metrics)

    p_agg = sub.add_parser("aggregate", help="corpus-level summary table")
    p_agg.add_argument("--in", dest="inputs", nargs="+", required=True,
                       help="session export files")
    p_agg.add_argument("--embedder", choices=["reference", "service"],
                       default="reference")
    p_agg.add_argument("--out", required=True, help="output CSV path")
    p_agg.add_argument("--bins", type=int, default=10,
                       help="histogram bin count (default 10)")
    p_agg.set_defaults(func=cmd_aggregate)
    return parser


def main(argv: Optional[list[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())

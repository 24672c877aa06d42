#!/usr/bin/env python3
"""End-to-end analysis pipeline on a synthetic two-persona corpus.

Generates scripted sessions through the real session service (mock provider),
then runs the analysis CLI on the exports and prints the headline numbers:
the "keeper" persona keeps suggestions untouched, the "heavy-rewriter"
deletes most of each one, and the aggregate means recover that gap.
"""

import csv
import tempfile
from pathlib import Path

from writetrace.cli import main as writetrace_cli
from writetrace.personas import HEAVY_REWRITER, KEEPER, generate_persona_corpus

workdir = Path(tempfile.mkdtemp(prefix="writetrace-demo-"))
corpus = workdir / "corpus"
print(f"generating corpus under {corpus} ...")
truth = generate_persona_corpus(corpus, sessions_per_persona=5, seed=42)

for persona in (KEEPER, HEAVY_REWRITER):
    files = sorted(str(p) for p in corpus.glob(f"{persona}-*.json"))
    out = workdir / f"{persona}.csv"
    writetrace_cli(["aggregate", "--in", *files, "--out", str(out)])
    with open(out, newline="", encoding="utf-8") as fh:
        rows = {(r[0], r[1], r[2]): r[3] for r in csv.reader(fh)}
    print(f"\n{persona}:")
    print(f"  scripted ground truth mean  {truth.mean(persona):.4f}")
    print(f"  aggregate words_remaining   {rows[('all', 'words_remaining', 'mean')]}")
    print(f"  aggregate edit_count mean   {rows[('all', 'edit_count', 'mean')]}")
    print(f"  kept <=5-segment share      {rows[('all', 'kept_low_segment_share', 'value')]}")

per_suggestion = workdir / "per_suggestion.csv"
writetrace_cli([
    "metrics", "--in", *sorted(str(p) for p in corpus.glob("*.json")),
    "--out", str(per_suggestion),
])
with open(per_suggestion, newline="", encoding="utf-8") as fh:
    lines = list(csv.reader(fh))
print(f"\nper-suggestion metrics written to {per_suggestion}")
print("first rows:")
for row in lines[:4]:
    print("  " + ", ".join(row))

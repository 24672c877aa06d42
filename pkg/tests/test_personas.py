import json

from writetrace.events import parse_log, replay
from writetrace.personas import (
    HEAVY_REWRITER,
    KEEPER,
    PersonaGroundTruth,
    generate_persona_corpus,
)


def test_ground_truth_matches_personas(tmp_path):
    truth = generate_persona_corpus(tmp_path / "c", sessions_per_persona=2, seed=3)
    assert all(v == 1.0 for v in truth.per_suggestion[KEEPER])
    assert all(v <= 0.20 for v in truth.per_suggestion[HEAVY_REWRITER])
    assert len(truth.per_suggestion[KEEPER]) == 4  # 2 sessions x 2 suggestions


def test_exports_replay_cleanly(tmp_path):
    generate_persona_corpus(tmp_path / "c", sessions_per_persona=1, seed=5)
    exports = sorted((tmp_path / "c").glob("*.json"))
    assert len(exports) == 2
    for path in exports:
        doc = json.loads(path.read_text(encoding="utf-8"))
        buffer = replay(parse_log(doc["log"]))
        assert buffer.text == doc["final_text"]
        assert doc["session_id"] == path.stem


def test_deterministic_across_runs(tmp_path):
    generate_persona_corpus(tmp_path / "a", sessions_per_persona=2, seed=11)
    generate_persona_corpus(tmp_path / "b", sessions_per_persona=2, seed=11)
    for path_a in sorted((tmp_path / "a").glob("*.json")):
        path_b = tmp_path / "b" / path_a.name
        assert path_a.read_bytes() == path_b.read_bytes()


def test_mean_helper():
    truth = PersonaGroundTruth()
    truth.add("p", 1.0)
    truth.add("p", 0.5)
    assert truth.mean("p") == 0.75

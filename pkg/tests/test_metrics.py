import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fixtures import build_cafe_fixture
from oracle import naive_replay, naive_words_remaining
from writetrace.events import EditEvent, EventKind, replay
from writetrace.metrics import (
    KindAggregate,
    RewriteMetrics,
    SuggestionNotFoundError,
    TrigramHashEmbedder,
    UndefinedMetricError,
    aggregate_metrics,
    cosine_similarity,
    edit_count,
    embedding_similarity,
    reference_embed,
    session_summary,
    suggestion_metrics,
    word_count,
    words_remaining,
)
from writetrace.provenance import OriginTag, ProvenanceBuffer
from writetrace.suggestions import SuggestionKind, SuggestionRecord

USER = OriginTag.user()


def record_for(sid, text, kind=SuggestionKind.FLUENT):
    return SuggestionRecord(sid, kind, "", text, 0)


def session(*steps):
    """Build an event list from (kind, kwargs) steps with auto seq/timestamps."""
    events = []
    for i, (kind, kwargs) in enumerate(steps, start=1):
        events.append(EditEvent(seq=i, timestamp_ms=i * 500, kind=kind, **kwargs))
    return events


def insert_step(pos, text):
    return (EventKind.TEXT_INSERT, dict(position=pos, text=text, origin=USER))


def delete_step(pos, length):
    return (EventKind.TEXT_DELETE, dict(position=pos, length=length))


def suggest_step(sid, pos, text):
    return (
        EventKind.SUGGESTION_INSERTED,
        dict(position=pos, text=text, origin=OriginTag.ai(sid), suggestion_id=sid),
    )


class TestWordCount:
    def test_basic(self):
        assert word_count("one two  three") == 3
        assert word_count("") == 0
        assert word_count("  \n ") == 0
        assert word_count("don't stop-me now.") == 3


class TestReferenceEmbedder:
    def test_deterministic(self):
        assert np.array_equal(reference_embed("hello world"), reference_embed("hello world"))

    def test_unit_norm(self):
        for text in ("abc", "a longer sentence with words", "ééé"):
            assert abs(np.linalg.norm(reference_embed(text)) - 1.0) < 1e-9

    def test_case_folded(self):
        assert np.array_equal(reference_embed("Hello"), reference_embed("hello"))

    def test_trailing_space_adds_one_trigram(self):
        a, b = reference_embed("abc"), reference_embed("abc ")
        # "abc" contributes its single trigram to both; "bc " only to the second
        assert np.count_nonzero(a) == 1
        assert np.count_nonzero(b) == 2
        assert ((a > 0) & (b > 0)).sum() == 1

    def test_empty_rejected(self):
        with pytest.raises(UndefinedMetricError):
            reference_embed("")

    def test_too_short_rejected(self):
        with pytest.raises(UndefinedMetricError):
            reference_embed("ab")

    def test_custom_dim(self):
        assert TrigramHashEmbedder(dim=64).embed("hello world").shape == (64,)


class TestEmbeddingSimilarity:
    def test_identical_is_exactly_one(self):
        assert embedding_similarity("some text here", "some text here") == 1.0

    def test_disjoint_trigrams_orthogonal(self):
        # trigram sets {"aaa"} and {"bbb"} hash to distinct buckets
        assert embedding_similarity("aaaa", "bbbb") == 0.0

    def test_empty_rejected(self):
        with pytest.raises(UndefinedMetricError):
            embedding_similarity("", "anything")

    def test_zero_vector_rejected(self):
        class ZeroEmbedder:
            def embed(self, text):
                return np.zeros(4)

        with pytest.raises(UndefinedMetricError):
            embedding_similarity("abc", "def", ZeroEmbedder())

    def test_cosine_clamped(self):
        v = np.ones(3)
        assert cosine_similarity(v, v) == 1.0

    @given(st.lists(st.sampled_from("lantern marble story river quiet".split()),
                    min_size=1, max_size=8),
           st.lists(st.sampled_from("lantern marble story river quiet".split()),
                    min_size=1, max_size=8))
    @settings(max_examples=60)
    def test_symmetric_and_in_range(self, a_words, b_words):
        a, b = " ".join(a_words), " ".join(b_words)
        s1 = embedding_similarity(a, b)
        s2 = embedding_similarity(b, a)
        assert abs(s1 - s2) < 1e-12
        assert 0.0 <= s1 <= 1.0  # reference embedder vectors are non-negative


class TestWordsRemaining:
    def test_untouched(self):
        events = session(
            insert_step(0, "x" * 20 + " "),
            suggest_step("s1", 21, "one two three four five six seven eight nine ten"),
        )
        buf = replay(events)
        rec = record_for("s1", "one two three four five six seven eight nine ten")
        assert words_remaining(rec, buf) == 1.0

    def test_fully_deleted(self):
        text = "gone entirely"
        events = session(
            insert_step(0, "keep "),
            suggest_step("s1", 5, text),
            delete_step(5, len(text)),
        )
        assert words_remaining(record_for("s1", text), replay(events)) == 0.0

    def test_single_word_replaced(self):
        # 5-word suggestion; "is" swapped for user "was" -> 4/5
        text = "The Corner Bakery is busy"
        events = session(
            insert_step(0, "ctx "),
            suggest_step("s1", 4, text),
            delete_step(4 + text.index("is"), 2),
            insert_step(4 + text.index("is"), "was"),
        )
        buf = replay(events)
        assert words_remaining(record_for("s1", text), buf) == pytest.approx(4 / 5)
        doc = naive_replay(events)
        assert naive_words_remaining(doc, "s1", text) == pytest.approx(4 / 5)

    def test_inflection_keeps_attribution(self):
        # AI "walk" + user "ed": 4 of 6 chars AI -> still an AI word
        text = "they walk home"
        events = session(
            insert_step(0, "ctx "),
            suggest_step("s1", 4, text),
            insert_step(4 + text.index("walk") + 4, "ed"),
        )
        assert words_remaining(record_for("s1", text), replay(events)) == 1.0

    def test_tie_counts_as_user(self):
        # AI "ab" + user "cd": exactly half -> user word
        events = session(
            insert_step(0, "ctx "),
            suggest_step("s1", 4, "ab zz"),
            insert_step(6, "cd"),
        )
        buf = replay(events)
        assert words_remaining(record_for("s1", "ab zz"), buf) == pytest.approx(1 / 2)

    def test_word_splitting_capped_at_one(self):
        # user space splits one AI word into two AI-majority words
        text = "abcdef gh"
        events = session(
            insert_step(0, "ctx "),
            suggest_step("s1", 4, text),
            insert_step(4 + 3, " "),
        )
        assert words_remaining(record_for("s1", text), replay(events)) == 1.0

    def test_empty_suggestion_undefined(self):
        buf = ProvenanceBuffer.from_pieces([("hello", USER)])
        with pytest.raises(UndefinedMetricError):
            words_remaining(record_for("s1", "   "), buf)

    @given(st.data())
    @settings(max_examples=120)
    def test_matches_oracle_on_small_sessions(self, data):
        words = "lantern river story marble quiet answer".split()
        prefix = " ".join(data.draw(st.lists(st.sampled_from(words), min_size=1, max_size=5)))
        suggestion = " ".join(data.draw(st.lists(st.sampled_from(words), min_size=1, max_size=8)))
        steps = [insert_step(0, prefix + " "), suggest_step("s1", len(prefix) + 1, suggestion)]
        doc_len = len(prefix) + 1 + len(suggestion)
        for _ in range(data.draw(st.integers(0, 10))):
            if doc_len > 2 and data.draw(st.booleans()):
                pos = data.draw(st.integers(0, doc_len - 2))
                n = data.draw(st.integers(1, min(6, doc_len - pos)))
                steps.append(delete_step(pos, n))
                doc_len -= n
            else:
                pos = data.draw(st.integers(0, doc_len))
                text = data.draw(st.sampled_from(["x", "yz", " ", "um "]))
                steps.append(insert_step(pos, text))
                doc_len += len(text)
        events = session(*steps)
        buf = replay(events)
        doc = naive_replay(events)
        got = words_remaining(record_for("s1", suggestion), buf)
        want = naive_words_remaining(doc, "s1", suggestion)
        assert got == pytest.approx(want)
        assert 0.0 <= got <= 1.0

    def test_deleting_ai_chars_never_increases(self):
        fx = build_cafe_fixture()
        buf = replay(fx.events)
        base = words_remaining(fx.record, buf)
        span = buf.rewritten_span(fx.suggestion_id)
        for pos in range(span.start, span.end + 1, 7):
            if buf.origin_at(pos).is_ai_for(fx.suggestion_id):
                reduced = words_remaining(fx.record, buf.delete(pos, 1))
                assert reduced <= base + 1e-12


class TestEditCount:
    def base_events(self):
        return [
            insert_step(0, "a little context here "),
            suggest_step("s1", 22, "alpha beta gamma"),
        ]

    def test_no_ops_zero(self):
        events = session(*self.base_events())
        assert edit_count(events, "s1") == 0

    def test_ops_inside_counted(self):
        # span is [22, 37]; 3 inserts + 2 deletes inside it
        events = session(
            *self.base_events(),
            insert_step(25, "x"),
            insert_step(30, "y"),
            insert_step(35, "z"),
            delete_step(23, 2),
            delete_step(24, 1),
        )
        assert edit_count(events, "s1") == 5

    def test_ops_before_span_not_counted(self):
        events = session(
            *self.base_events(),
            insert_step(0, "a"),
            insert_step(3, "b"),
            insert_step(10, "c"),
            insert_step(21, "d"),
        )
        assert edit_count(events, "s1") == 0

    def test_boundary_after_span_counts(self):
        # context + trailing tail; suggestion spans [22, 37]
        tail_events = [
            insert_step(0, "a little context here  plus a tail"),
            suggest_step("s1", 22, "alpha beta gamma"),
        ]
        events = session(*tail_events, insert_step(38, "!"))
        assert edit_count(events, "s1") == 1
        events = session(*tail_events, insert_step(39, "!"))
        assert edit_count(events, "s1") == 0

    def test_not_counted_after_span_gone(self):
        events = session(
            *self.base_events(),
            delete_step(22, 16),       # removes the whole suggestion (counts)
            insert_step(10, "later"),  # span gone: not counted
            insert_step(20, "more"),
        )
        assert edit_count(events, "s1") == 1

    def test_unknown_suggestion(self):
        events = session(*self.base_events())
        with pytest.raises(SuggestionNotFoundError):
            edit_count(events, "nope")


class TestSuggestionMetrics:
    def test_identity_triple(self):
        text = "ten exact words of text sit right here in place"
        events = session(insert_step(0, "c" * 120 + " "), suggest_step("s1", 121, text))
        buf = replay(events)
        m = suggestion_metrics(events, buf, record_for("s1", text))
        assert m == RewriteMetrics("s1", SuggestionKind.FLUENT, 1.0, 1.0, 0, 1)

    def test_fully_deleted_triple(self):
        text = "soon to vanish"
        events = session(
            insert_step(0, "keep this "),
            suggest_step("s1", 10, text),
            delete_step(10, len(text)),
        )
        buf = replay(events)
        m = suggestion_metrics(events, buf, record_for("s1", text))
        assert m.words_remaining == 0.0
        assert m.embedding_similarity is None
        assert m.edit_count == 1
        assert m.segment_count == 0

    def test_cafe_fixture(self):
        fx = build_cafe_fixture()
        buf = replay(fx.events)
        m = suggestion_metrics(fx.events, buf, fx.record)
        assert m.segment_count == fx.expected_segments == 9
        assert m.words_remaining == pytest.approx(
            fx.expected_words_numerator / fx.expected_words_denominator
        )
        # cross-check against the independent word-attribution oracle
        doc = naive_replay(fx.events)
        assert m.words_remaining == pytest.approx(
            naive_words_remaining(doc, fx.suggestion_id, fx.record.final_text)
        )
        assert m.edit_count == fx.expected_edit_count
        assert m.embedding_similarity is not None
        assert 0.0 < m.embedding_similarity < 1.0


class TestSessionSummary:
    def test_known_counts(self):
        user_words = " ".join(f"w{i}" for i in range(90))
        ai_words = " " + " ".join(f"a{i}" for i in range(10))
        events = session(
            insert_step(0, user_words),
            suggest_step("s1", len(user_words), ai_words),
        )
        summary = session_summary(events, records=[record_for("s1", ai_words)])
        assert summary.total_words == 100
        assert summary.ai_words == 10
        assert summary.ai_word_share == pytest.approx(0.10)
        agg = summary.metric_means["fluent"]
        assert agg == KindAggregate(1, 1.0, 1.0, 0.0, 1.0)

    def test_empty_session(self):
        summary = session_summary([])
        assert summary.total_words == 0
        assert summary.ai_words == 0
        assert summary.ai_word_share == 0.0
        assert summary.duration_ms == 0
        assert summary.metric_means == {}

    def test_no_suggestions(self):
        events = session(insert_step(0, "just some user words"))
        summary = session_summary(events)
        assert summary.ai_word_share == 0.0
        assert summary.suggestion_counts == {}

    def test_without_records_kind_unknown(self):
        events = session(insert_step(0, "abc def "), suggest_step("s1", 8, "tail words"))
        summary = session_summary(events)
        assert summary.suggestion_counts == {"unknown": 1}

    def test_duration_is_last_timestamp(self):
        events = session(insert_step(0, "hi"))
        assert session_summary(events).duration_ms == 500


class TestAggregate:
    def test_means(self):
        ms = [
            RewriteMetrics("a", SuggestionKind.FLUENT, 1.0, 1.0, 0, 1),
            RewriteMetrics("b", SuggestionKind.FLUENT, 0.0, None, 4, 0),
        ]
        agg = aggregate_metrics(ms)
        assert agg.count == 2
        assert agg.words_remaining_mean == pytest.approx(0.5)
        assert agg.embedding_similarity_mean == pytest.approx(1.0)  # absent skipped
        assert agg.edit_count_mean == pytest.approx(2.0)

    def test_empty_rejected(self):
        with pytest.raises(UndefinedMetricError):
            aggregate_metrics([])

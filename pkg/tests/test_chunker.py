import pytest

from introseg.chunker import ChunkConfig, ChunkError, SpanWindow, context_size, merge, split


def oracle_merge(doc_len, windows):
    """O(N*W) scan: for each token, pick the covering window with max context."""
    out = []
    for t in range(doc_len):
        best = None
        for window, scores in sorted(windows, key=lambda item: (item[0].doc_offset, item[0].length)):
            if window.doc_offset <= t < window.end:
                ctx = min(t - window.doc_offset, window.end - 1 - t)
                if best is None or ctx > best[0]:
                    best = (ctx, scores[t - window.doc_offset])
        assert best is not None, "uncovered token in oracle"
        out.append(float(best[1]))
    return out


class TestConfig:
    def test_stride(self):
        assert ChunkConfig(512, 128).stride == 384

    @pytest.mark.parametrize("max_len,overlap", [(0, 0), (4, 4), (4, 5), (4, -1)])
    def test_invalid_configs(self, max_len, overlap):
        with pytest.raises(ChunkError):
            ChunkConfig(max_len, overlap)


class TestSplit:
    def test_short_document_is_one_window(self):
        assert split(300, ChunkConfig(512, 128)) == [SpanWindow(0, 300)]

    def test_exact_length_is_one_window(self):
        assert split(512, ChunkConfig(512, 128)) == [SpanWindow(0, 512)]

    def test_two_window_example(self):
        assert split(600, ChunkConfig(512, 128)) == [SpanWindow(0, 512), SpanWindow(384, 216)]

    def test_invalid_doc_len(self):
        with pytest.raises(ChunkError):
            split(0, ChunkConfig())

    def test_tiling_invariants_random(self, rng):
        for _ in range(300):
            max_len = int(rng.integers(1, 64))
            overlap = int(rng.integers(0, max_len))
            doc_len = int(rng.integers(1, 400))
            cfg = ChunkConfig(max_len, overlap)
            windows = split(doc_len, cfg)
            assert windows[0].doc_offset == 0
            assert windows[-1].end == doc_len
            for a, b in zip(windows, windows[1:]):
                assert b.doc_offset - a.doc_offset == cfg.stride
            covered = set()
            for w in windows:
                assert 1 <= w.length <= max_len
                covered.update(range(w.doc_offset, w.end))
            assert covered == set(range(doc_len))


class TestMerge:
    def test_single_window_token_keeps_its_score(self):
        windows = split(600, ChunkConfig(512, 128))
        scores = [(windows[0], [0.25] * 512), (windows[1], [0.75] * 216)]
        merged = merge(600, scores)
        assert merged[10] == 0.25  # covered only by the first window
        assert merged[599] == 0.75

    def test_hand_computed_contest(self):
        # token 500: context 11 in window A, 99 in window B -> B wins
        # token 400: context 111 in A, 16 in B -> A wins
        a, b = SpanWindow(0, 512), SpanWindow(384, 216)
        assert context_size(500, a) == 11 and context_size(500, b) == 99
        assert context_size(400, a) == 111 and context_size(400, b) == 16
        merged = merge(600, [(a, [0.1] * 512), (b, [0.9] * 216)])
        assert merged[500] == 0.9
        assert merged[400] == 0.1

    def test_constant_field_round_trip(self):
        for doc_len in (1, 5, 100, 513, 600, 1024):
            cfg = ChunkConfig(512, 128)
            windows = split(doc_len, cfg)
            merged = merge(doc_len, [(w, [0.5] * w.length) for w in windows])
            assert merged == [0.5] * doc_len

    def test_order_invariance(self, rng):
        cfg = ChunkConfig(16, 8)
        doc_len = 100
        windows = split(doc_len, cfg)
        spans = [(w, [float(v) for v in rng.random(w.length)]) for w in windows]
        forward = merge(doc_len, spans)
        assert merge(doc_len, list(reversed(spans))) == forward

    def test_merged_scores_come_from_some_window(self, rng):
        cfg = ChunkConfig(16, 5)
        doc_len = 80
        spans = [(w, [float(v) for v in rng.random(w.length)]) for w in split(doc_len, cfg)]
        merged = merge(doc_len, spans)
        for t, value in enumerate(merged):
            assert any(
                w.doc_offset <= t < w.end and scores[t - w.doc_offset] == value
                for w, scores in spans
            )

    def test_matches_oracle_on_random_docs(self, rng):
        for _ in range(200):
            max_len = int(rng.integers(2, 700))
            overlap = int(rng.integers(0, max_len))
            doc_len = int(rng.integers(1, 2001))
            windows = split(doc_len, ChunkConfig(max_len, overlap))
            spans = [(w, [float(v) for v in rng.random(w.length)]) for w in windows]
            assert merge(doc_len, spans) == oracle_merge(doc_len, spans)

    def test_length_mismatch_rejected(self):
        with pytest.raises(ChunkError, match="scores for length"):
            merge(10, [(SpanWindow(0, 10), [0.5] * 9)])

    def test_uncovered_token_rejected(self):
        with pytest.raises(ChunkError, match="not covered"):
            merge(10, [(SpanWindow(0, 5), [0.5] * 5)])

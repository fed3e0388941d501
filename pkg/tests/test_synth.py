import pytest

from introseg.corpus import load_corpus, resolve_gold, save_corpus
from introseg.synth import SynthConfig, SynthError, generate, random_embeddings


def small_cfg(**kw):
    defaults = dict(
        programs=3,
        episodes_per_program=4,
        intro_start_range=(5, 20),
        intro_len_range=(10, 30),
        episode_len_range=(60, 90),
        seed=13,
    )
    defaults.update(kw)
    return SynthConfig(**defaults)


class TestConfig:
    def test_vocabularies_must_be_disjoint(self):
        with pytest.raises(SynthError, match="disjoint"):
            small_cfg(body_vocab=("a", "b"), intro_vocab=("b", "c"))

    def test_intro_must_fit_shortest_episode(self):
        with pytest.raises(SynthError, match="fit inside"):
            small_cfg(intro_start_range=(50, 60), intro_len_range=(20, 40))

    def test_from_dict_round_trip(self):
        cfg = small_cfg()
        obj = {
            "programs": 3,
            "episodes_per_program": 4,
            "intro_start_range": [5, 20],
            "intro_len_range": [10, 30],
            "episode_len_range": [60, 90],
            "seed": 13,
        }
        assert SynthConfig.from_dict(obj) == cfg

    def test_from_dict_rejects_unknown_keys(self):
        with pytest.raises(SynthError, match="bad synth config"):
            SynthConfig.from_dict({"bogus": 1})


class TestGenerate:
    def test_deterministic_given_seed(self):
        a_docs, a_golds = generate(small_cfg())
        b_docs, b_golds = generate(small_cfg())
        assert a_docs == b_docs and a_golds == b_golds
        c_docs, _ = generate(small_cfg(seed=14))
        assert a_docs != c_docs

    def test_clean_vocabulary_separation(self):
        cfg = small_cfg(vocab_mix=0.0, noise_prob=0.0)
        docs, golds = generate(cfg)
        body, intro = set(cfg.body_vocab), set(cfg.intro_vocab)
        for doc, gold in zip(docs, golds):
            for i, tok in enumerate(doc.tokens):
                if gold.intro and gold.intro.start <= i < gold.intro.end:
                    assert tok.text in intro
                else:
                    assert tok.text in body

    def test_no_intro_prob_one(self):
        docs, golds = generate(small_cfg(no_intro_prob=1.0))
        assert all(g.intro is None for g in golds)
        assert all(d.annotations[0].intro is None for d in docs)

    def test_gold_ranges_within_configured_bounds(self):
        cfg = small_cfg(programs=10, episodes_per_program=10)
        docs, golds = generate(cfg)
        for doc, gold in zip(docs, golds):
            assert cfg.episode_len_range[0] <= len(doc) <= cfg.episode_len_range[1]
            if gold.intro is None:
                continue
            assert cfg.intro_start_range[0] <= gold.intro.start <= cfg.intro_start_range[1]
            assert cfg.intro_len_range[0] <= len(gold.intro) <= cfg.intro_len_range[1]
            assert gold.intro.end <= len(doc)

    def test_timestamps_follow_constant_rate(self):
        docs, _ = generate(small_cfg())
        doc = docs[0]
        assert doc.tokens[0].start_ms == 0
        assert doc.tokens[7].start_ms == round(7 * 1000 / 3.5)
        starts = [t.start_ms for t in doc.tokens]
        assert starts == sorted(starts)

    def test_annotation_resolves_to_planted_gold(self):
        docs, golds = generate(small_cfg())
        for doc, gold in zip(docs, golds):
            resolved = resolve_gold(doc)
            assert resolved.intro == gold.intro

    def test_round_trip_through_corpus_file(self, tmp_path):
        docs, _ = generate(small_cfg())
        path = tmp_path / "synth.jsonl"
        save_corpus(docs, path)
        reloaded = load_corpus(path)
        assert reloaded == docs
        again = tmp_path / "again.jsonl"
        save_corpus(reloaded, again)
        assert path.read_bytes() == again.read_bytes()

    def test_noise_replaces_some_tokens(self):
        clean, _ = generate(small_cfg(vocab_mix=0.0, noise_prob=0.0))
        noisy, _ = generate(small_cfg(vocab_mix=0.0, noise_prob=0.3))
        assert clean != noisy


class TestRandomEmbeddings:
    def test_deterministic_and_complete(self):
        table = random_embeddings(["b", "a", "c"], dim=8, seed=3)
        again = random_embeddings(["c", "a", "b"], dim=8, seed=3)
        assert table.dim == 8 and len(table) == 3
        for tok in ("a", "b", "c"):
            assert (table.get(tok) == again.get(tok)).all()

    def test_empty_vocab_rejected(self):
        with pytest.raises(SynthError):
            random_embeddings([], dim=4, seed=0)

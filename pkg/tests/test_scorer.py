import numpy as np
import pytest

from introseg.chunker import ChunkConfig
from introseg.corpus import Agreement, Annotation, GoldLabel, Token, TokenRange
from introseg.scorer import (
    EmbeddingError,
    EmbeddingTable,
    LogisticModel,
    ScoreFileError,
    ScoreSequence,
    TrainConfig,
    TrainError,
    build_training_set,
    class_weights,
    featurize,
    fit,
    import_scores,
    load_embeddings,
    load_model,
    loss_and_grad,
    save_embeddings,
    save_model,
    save_scores,
    score_document,
    train_logistic,
)

from conftest import make_doc


def write_vectors(path, lines):
    path.write_text("\n".join(lines) + "\n")


class TestEmbeddings:
    def test_load_two_entries(self, tmp_path):
        path = tmp_path / "vec.txt"
        write_vectors(path, ["hello 0.1 0.2 0.3", "world 1 2 3"])
        table = load_embeddings(path)
        assert table.dim == 3 and len(table) == 2
        assert np.allclose(table.get("world"), [1, 2, 3])

    def test_oov_is_zero_vector(self, tmp_path):
        path = tmp_path / "vec.txt"
        write_vectors(path, ["hello 0.1 0.2 0.3"])
        table = load_embeddings(path)
        assert np.array_equal(table.get("zzqqx"), np.zeros(3))

    def test_dimension_mismatch_reports_line(self, tmp_path):
        path = tmp_path / "vec.txt"
        write_vectors(path, ["a 1 2 3", "b 1 2"])
        with pytest.raises(EmbeddingError, match="line 2"):
            load_embeddings(path)

    def test_empty_file_rejected(self, tmp_path):
        path = tmp_path / "vec.txt"
        path.write_text("")
        with pytest.raises(EmbeddingError, match="empty"):
            load_embeddings(path)

    def test_save_load_round_trip(self, tmp_path, rng):
        table = EmbeddingTable(4, {"a": rng.random(4), "b": rng.random(4)})
        path = tmp_path / "vec.txt"
        save_embeddings(table, path)
        reloaded = load_embeddings(path)
        assert reloaded.dim == 4
        assert np.allclose(reloaded.get("a"), table.get("a"), atol=1e-6)


class TestFeaturize:
    @pytest.fixture
    def table(self):
        return EmbeddingTable(2, {"hello": np.array([1.0, 0.0]), "world": np.array([0.0, 1.0])})

    def test_case_folding(self, table):
        vec = featurize(Token("Hello", 0), table)
        assert np.array_equal(vec, [1.0, 0.0])

    def test_punctuation_strip(self, table):
        vec = featurize(Token("world,", 0), table)
        assert np.array_equal(vec, [0.0, 1.0])
        vec = featurize(Token('"WORLD!"', 0), table)
        assert np.array_equal(vec, [0.0, 1.0])

    def test_oov(self, table):
        assert np.array_equal(featurize(Token("zzqqx", 0), table), [0.0, 0.0])


class TestGradients:
    def test_analytic_matches_central_differences(self, rng):
        step = 1e-5
        for _ in range(50):
            n, dim = int(rng.integers(3, 20)), int(rng.integers(1, 6))
            features = rng.normal(size=(n, dim))
            labels = rng.integers(0, 2, size=n).astype(float)
            if labels.sum() in (0, n):
                labels[0] = 1.0 - labels[0]
            weights = rng.normal(size=dim)
            bias = float(rng.normal())
            sw = class_weights(labels)
            l2 = float(rng.choice([0.0, 1e-4, 1e-2]))

            _, grad_w, grad_b = loss_and_grad(weights, bias, features, labels, sw, l2)
            num_w = np.zeros(dim)
            for d in range(dim):
                up, down = weights.copy(), weights.copy()
                up[d] += step
                down[d] -= step
                lu, _, _ = loss_and_grad(up, bias, features, labels, sw, l2)
                ld, _, _ = loss_and_grad(down, bias, features, labels, sw, l2)
                num_w[d] = (lu - ld) / (2 * step)
            lu, _, _ = loss_and_grad(weights, bias + step, features, labels, sw, l2)
            ld, _, _ = loss_and_grad(weights, bias - step, features, labels, sw, l2)
            num_b = (lu - ld) / (2 * step)

            scale = max(np.linalg.norm(np.append(grad_w, grad_b)), 1e-8)
            err = np.linalg.norm(np.append(grad_w - num_w, grad_b - num_b)) / scale
            assert err < 1e-4


class TestTraining:
    def toy_problem(self):
        # intro tokens embed to (1, 0); others to (0, 1): linearly separable
        features = np.array([[1.0, 0.0]] * 20 + [[0.0, 1.0]] * 60)
        labels = np.array([1.0] * 20 + [0.0] * 60)
        return features, labels

    def test_zero_init_scores_half(self):
        model = LogisticModel(weights=np.zeros(2), bias=0.0)
        assert np.allclose(model.predict_proba(np.array([[3.0, -1.0]])), 0.5)

    def test_separable_toy_reaches_margins(self):
        features, labels = self.toy_problem()
        cfg = TrainConfig(learning_rate=0.5, epochs=2000, l2=0.0)
        model, _ = fit(features, labels, cfg)
        intro_score = model.predict_proba(np.array([[1.0, 0.0]]))[0]
        other_score = model.predict_proba(np.array([[0.0, 1.0]]))[0]
        assert intro_score > 0.9
        assert other_score < 0.1

    def test_duplication_leaves_model_unchanged(self):
        features, labels = self.toy_problem()
        cfg = TrainConfig()
        base, _ = fit(features, labels, cfg)
        doubled, _ = fit(np.vstack([features, features]), np.concatenate([labels, labels]), cfg)
        assert np.allclose(base.weights, doubled.weights, atol=1e-12)
        assert base.bias == pytest.approx(doubled.bias, abs=1e-12)

    def test_loss_monotone_decreasing_default_config(self):
        features, labels = self.toy_problem()
        cfg = TrainConfig()
        _, history = fit(features, labels, cfg)
        diffs = np.diff(history)
        if not np.all(diffs <= 1e-12):
            # convex problem: halving the rate must restore monotonicity
            cfg = TrainConfig(learning_rate=cfg.learning_rate / 2)
            _, history = fit(features, labels, cfg)
            diffs = np.diff(history)
        assert np.all(diffs <= 1e-12)

    def test_single_class_rejected(self):
        with pytest.raises(TrainError, match="single class"):
            fit(np.ones((4, 2)), np.ones(4), TrainConfig())

    def test_determinism(self):
        features, labels = self.toy_problem()
        a, _ = fit(features, labels, TrainConfig(seed=3))
        b, _ = fit(features, labels, TrainConfig(seed=3))
        assert np.array_equal(a.weights, b.weights) and a.bias == b.bias


def labeled_corpus(table):
    texts1 = tuple(["aa"] * 3 + ["bb"] * 9)
    doc1 = make_doc("e1", "p1", texts1, annotations=(Annotation("x", TokenRange(0, 3)),))
    doc2 = make_doc("e2", "p1", ("bb",) * 8, annotations=(Annotation("x", None),))
    golds = {
        "e1": GoldLabel("e1", TokenRange(0, 3), Agreement.PERFECT, Agreement.PERFECT),
        "e2": GoldLabel("e2", None, Agreement.PERFECT, Agreement.PERFECT),
    }
    return [doc1, doc2], golds


class TestCorpusTraining:
    @pytest.fixture
    def table(self):
        return EmbeddingTable(2, {"aa": np.array([1.0, 0.0]), "bb": np.array([0.0, 1.0])})

    def test_no_intro_documents_contribute_negatives(self, table):
        docs, golds = labeled_corpus(table)
        features, labels = build_training_set(docs, golds, table)
        assert features.shape == (20, 2)
        assert labels.sum() == 3

    def test_unagreed_documents_are_skipped(self, table):
        docs, golds = labeled_corpus(table)
        golds["e2"] = GoldLabel("e2", None, Agreement.NONE, Agreement.NONE)
        features, _ = build_training_set(docs, golds, table)
        assert features.shape[0] == len(docs[0])

    def test_train_and_score_document(self, table):
        docs, golds = labeled_corpus(table)
        model = train_logistic(docs, golds, table, TrainConfig(epochs=500, learning_rate=0.5))
        seq = score_document(docs[0], model, table)
        assert isinstance(seq, ScoreSequence)
        assert len(seq) == len(docs[0])
        assert all(0.0 <= s <= 1.0 for s in seq.scores)
        assert seq.scores[0] > 0.8 and seq.scores[-1] < 0.2


class TestScoreDocument:
    def test_chunked_scoring_matches_whole_document(self, rng):
        # context-free scorer: span merging must not change any value
        vocab = {f"w{i}": rng.normal(size=4) for i in range(30)}
        table = EmbeddingTable(4, vocab)
        model = LogisticModel(weights=rng.normal(size=4), bias=0.1)
        texts = tuple(f"w{int(rng.integers(0, 30))}" for _ in range(190))
        doc = make_doc("e", "p", texts)
        whole = score_document(doc, model, table, ChunkConfig(max_len=512, overlap=128))
        chunked = score_document(doc, model, table, ChunkConfig(max_len=32, overlap=8))
        assert np.allclose(whole.scores, chunked.scores, atol=1e-15)

    def test_zero_weight_model_scores_half(self):
        table = EmbeddingTable(2, {"aa": np.array([1.0, 1.0])})
        model = LogisticModel(weights=np.zeros(2), bias=0.0)
        doc = make_doc("e", "p", ("aa",) * 10)
        seq = score_document(doc, model, table)
        assert all(s == 0.5 for s in seq.scores)


class TestScoreFiles:
    def docs(self):
        return [make_doc("e1", "p", tuple(f"w{i}" for i in range(10)))]

    def test_valid_file_accepted(self, tmp_path):
        path = tmp_path / "scores.jsonl"
        save_scores([ScoreSequence("e1", tuple([0.5] * 10))], path)
        (seq,) = import_scores(path, self.docs())
        assert seq.episode_id == "e1" and len(seq) == 10

    def test_length_mismatch(self, tmp_path):
        path = tmp_path / "scores.jsonl"
        save_scores([ScoreSequence("e1", tuple([0.5] * 9))], path)
        with pytest.raises(ScoreFileError, match="9 scores for 10 tokens"):
            import_scores(path, self.docs())

    def test_out_of_range_value_names_position(self, tmp_path):
        path = tmp_path / "scores.jsonl"
        path.write_text('{"episode_id": "e1", "scores": [0.1,0.2,0.3,1.2,0.5,0.5,0.5,0.5,0.5,0.5]}\n')
        with pytest.raises(ScoreFileError, match="position 3"):
            import_scores(path, self.docs())

    def test_unknown_episode(self, tmp_path):
        path = tmp_path / "scores.jsonl"
        save_scores([ScoreSequence("nope", (0.5,))], path)
        with pytest.raises(ScoreFileError, match="unknown episode_id 'nope'"):
            import_scores(path, self.docs())


class TestModelFile:
    def test_round_trip(self, tmp_path, rng):
        model = LogisticModel(weights=rng.normal(size=5), bias=-0.3)
        cfg = TrainConfig(epochs=7, seed=11)
        path = tmp_path / "model.json"
        save_model(model, cfg, path)
        loaded, echo = load_model(path)
        assert np.allclose(loaded.weights, model.weights)
        assert loaded.bias == pytest.approx(model.bias)
        assert echo["epochs"] == 7 and echo["seed"] == 11

    def test_wrong_format_rejected(self, tmp_path):
        path = tmp_path / "model.json"
        path.write_text('{"format": "other"}')
        with pytest.raises(TrainError, match="not a"):
            load_model(path)

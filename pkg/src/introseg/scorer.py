"""Per-token Is-intro scoring.

Two score sources share one currency, the ScoreSequence: a native logistic
classifier over static word embeddings (trained here with deterministic
full-batch gradient descent), and external score files produced by any other
model in the JSON Lines wire format accepted by :func:`import_scores`.
"""

from __future__ import annotations

import string
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from . import chunker
from .corpus import GoldLabel, Token, TranscriptDoc, intro_labels
from .fileio import read_json, read_jsonl, write_json, write_jsonl

MODEL_FORMAT = "introseg-logistic"
MODEL_VERSION = 1


class EmbeddingError(ValueError):
    pass


class ScoreFileError(ValueError):
    pass


class TrainError(ValueError):
    pass


@dataclass(frozen=True)
class ScoreSequence:
    """Per-token Is-intro probabilities for one episode, each in [0, 1]."""

    episode_id: str
    scores: tuple[float, ...]

    def __post_init__(self) -> None:
        for i, s in enumerate(self.scores):
            if not 0.0 <= s <= 1.0:
                raise ScoreFileError(f"{self.episode_id}: score {s} at position {i} outside [0, 1]")

    def __len__(self) -> int:
        return len(self.scores)


class EmbeddingTable:
    """Static word vectors with a zero out-of-vocabulary vector."""

    def __init__(self, dim: int, vectors: Mapping[str, np.ndarray]):
        self.dim = dim
        self._vectors = {tok: np.asarray(vec, dtype=np.float64) for tok, vec in vectors.items()}
        for tok, vec in self._vectors.items():
            if vec.shape != (dim,):
                raise EmbeddingError(f"vector for '{tok}' has dim {vec.shape}, expected ({dim},)")
        self.oov = np.zeros(dim, dtype=np.float64)

    def __contains__(self, token: str) -> bool:
        return token in self._vectors

    def __len__(self) -> int:
        return len(self._vectors)

    def get(self, token: str) -> np.ndarray:
        return self._vectors.get(token, self.oov)

    def tokens(self) -> list[str]:
        return sorted(self._vectors)


def load_embeddings(path: str | Path) -> EmbeddingTable:
    """Load a text vector file: ``token f1 f2 ... fD`` per line, dim from line 1."""
    vectors: dict[str, np.ndarray] = {}
    dim: int | None = None
    with Path(path).open("r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, 1):
            parts = line.rstrip("\n").split()
            if not parts:
                continue
            token, values = parts[0], parts[1:]
            if dim is None:
                if not values:
                    raise EmbeddingError(f"{path}: line {line_no}: no vector components")
                dim = len(values)
            if len(values) != dim:
                raise EmbeddingError(
                    f"{path}: line {line_no}: expected {dim} components, found {len(values)}"
                )
            try:
                vectors[token] = np.array([float(v) for v in values], dtype=np.float64)
            except ValueError as exc:
                raise EmbeddingError(f"{path}: line {line_no}: non-numeric component") from exc
    if dim is None:
        raise EmbeddingError(f"{path}: empty embedding file")
    return EmbeddingTable(dim=dim, vectors=vectors)


def save_embeddings(table: EmbeddingTable, path: str | Path) -> None:
    from .fileio import atomic_write_text

    lines = []
    for token in table.tokens():
        vec = " ".join(f"{v:.6f}" for v in table.get(token))
        lines.append(f"{token} {vec}\n")
    atomic_write_text(path, "".join(lines))


def featurize(token: Token, table: EmbeddingTable) -> np.ndarray:
    """Lowercased lookup; on a miss, retry with ASCII punctuation stripped."""
    text = token.text.lower()
    if text in table:
        return table.get(text)
    stripped = text.strip(string.punctuation)
    if stripped and stripped in table:
        return table.get(stripped)
    return table.oov


def featurize_doc(doc: TranscriptDoc, table: EmbeddingTable) -> np.ndarray:
    if not doc.tokens:
        return np.zeros((0, table.dim), dtype=np.float64)
    return np.stack([featurize(tok, table) for tok in doc.tokens])


@dataclass(frozen=True)
class LogisticModel:
    weights: np.ndarray
    bias: float

    def __post_init__(self) -> None:
        if not np.all(np.isfinite(self.weights)) or not np.isfinite(self.bias):
            raise TrainError("model parameters must be finite")

    @property
    def dim(self) -> int:
        return int(self.weights.shape[0])

    def predict_proba(self, features: np.ndarray) -> np.ndarray:
        z = features @ self.weights + self.bias
        return _sigmoid(z)


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.1
    epochs: int = 50
    l2: float = 1e-4
    seed: int = 0
    class_weighting: bool = True

    def __post_init__(self) -> None:
        if self.learning_rate <= 0:
            raise TrainError("learning_rate must be positive")
        if self.epochs < 1:
            raise TrainError("epochs must be a positive integer")
        if self.l2 < 0:
            raise TrainError("l2 must be non-negative")

    def to_dict(self) -> dict:
        return {
            "learning_rate": self.learning_rate,
            "epochs": self.epochs,
            "l2": self.l2,
            "seed": self.seed,
            "class_weighting": self.class_weighting,
        }


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z, dtype=np.float64)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def class_weights(labels: np.ndarray) -> np.ndarray:
    """Per-example weights inversely proportional to class frequency (mean 1)."""
    n = labels.shape[0]
    n_pos = int(labels.sum())
    n_neg = n - n_pos
    if n_pos == 0 or n_neg == 0:
        raise TrainError("training data contains a single class")
    w = np.where(labels > 0.5, n / (2.0 * n_pos), n / (2.0 * n_neg))
    return w


def loss_and_grad(
    weights: np.ndarray,
    bias: float,
    features: np.ndarray,
    labels: np.ndarray,
    sample_weights: np.ndarray,
    l2: float,
) -> tuple[float, np.ndarray, float]:
    """Weighted-mean cross-entropy with L2 penalty on the weights, plus gradients.

    loss = (1/N) sum_i w_i * [softplus(z_i) - y_i * z_i] + (l2/2) * ||w||^2
    """
    n = features.shape[0]
    z = features @ weights + bias
    # softplus(z) - y z, computed stably
    ce = np.logaddexp(0.0, z) - labels * z
    loss = float(np.sum(sample_weights * ce) / n + 0.5 * l2 * float(weights @ weights))
    dz = sample_weights * (_sigmoid(z) - labels) / n
    grad_w = features.T @ dz + l2 * weights
    grad_b = float(np.sum(dz))
    return loss, grad_w, grad_b


def fit(features: np.ndarray, labels: np.ndarray, cfg: TrainConfig) -> tuple[LogisticModel, list[float]]:
    """Full-batch gradient descent from a zero-initialized model.

    Returns the model and the per-epoch loss history (loss before each step,
    plus the final loss). Deterministic: no stochasticity is involved.
    """
    if features.ndim != 2 or features.shape[0] != labels.shape[0]:
        raise TrainError("features and labels must have matching first dimension")
    if features.shape[0] == 0:
        raise TrainError("no training examples")
    labels = labels.astype(np.float64)
    sw = class_weights(labels) if cfg.class_weighting else np.ones(labels.shape[0])

    weights = np.zeros(features.shape[1], dtype=np.float64)
    bias = 0.0
    history: list[float] = []
    for _ in range(cfg.epochs):
        loss, grad_w, grad_b = loss_and_grad(weights, bias, features, labels, sw, cfg.l2)
        history.append(loss)
        weights = weights - cfg.learning_rate * grad_w
        bias = bias - cfg.learning_rate * grad_b
    final_loss, _, _ = loss_and_grad(weights, bias, features, labels, sw, cfg.l2)
    history.append(final_loss)
    return LogisticModel(weights=weights, bias=bias), history


def build_training_set(
    docs: Sequence[TranscriptDoc],
    golds: Mapping[str, GoldLabel],
    table: EmbeddingTable,
) -> tuple[np.ndarray, np.ndarray]:
    """Stack per-token features and Is-intro labels over usable documents.

    Documents with a present gold intro contribute range-labeled tokens;
    documents whose annotators agreed on "no intro" contribute all-negative
    tokens; documents without agreement are skipped.
    """
    feats = []
    labels = []
    for doc in docs:
        gold = golds.get(doc.episode_id)
        if gold is None or not gold.usable or not doc.tokens:
            continue
        feats.append(featurize_doc(doc, table))
        labels.extend(intro_labels(doc, gold))
    if not feats:
        raise TrainError("no usable training documents (need gold labels with agreement)")
    features = np.vstack(feats)
    y = np.array(labels, dtype=np.float64)
    if not np.any(y > 0.5):
        raise TrainError("no Is-intro tokens in the training data")
    return features, y


def train_logistic(
    docs: Sequence[TranscriptDoc],
    golds: Mapping[str, GoldLabel],
    table: EmbeddingTable,
    cfg: TrainConfig = TrainConfig(),
) -> LogisticModel:
    features, labels = build_training_set(docs, golds, table)
    model, _ = fit(features, labels, cfg)
    return model


def score_document(
    doc: TranscriptDoc,
    model: LogisticModel,
    table: EmbeddingTable,
    chunk_cfg: chunker.ChunkConfig = chunker.ChunkConfig(),
) -> ScoreSequence:
    """Score each token via the model, span by span, then merge the spans."""
    if model.dim != table.dim:
        raise TrainError(f"model dim {model.dim} does not match embedding dim {table.dim}")
    if not doc.tokens:
        return ScoreSequence(episode_id=doc.episode_id, scores=())
    features = featurize_doc(doc, table)
    spans = []
    for window in chunker.split(len(doc), chunk_cfg):
        probs = model.predict_proba(features[window.doc_offset : window.end])
        spans.append((window, probs.tolist()))
    merged = chunker.merge(len(doc), spans)
    return ScoreSequence(episode_id=doc.episode_id, scores=tuple(merged))


def score_corpus(
    docs: Iterable[TranscriptDoc],
    model: LogisticModel,
    table: EmbeddingTable,
    chunk_cfg: chunker.ChunkConfig = chunker.ChunkConfig(),
) -> list[ScoreSequence]:
    return [score_document(doc, model, table, chunk_cfg) for doc in docs]


# --------------------------------------------------------------------------
# Wire formats
# --------------------------------------------------------------------------


def import_scores(path: str | Path, docs: Sequence[TranscriptDoc]) -> list[ScoreSequence]:
    """Load externally produced score files, validated against the corpus.

    Each line must be {"episode_id": str, "scores": [float...]} with a known
    episode id, one score per token, every value in [0, 1].
    """
    by_id = {doc.episode_id: doc for doc in docs}
    seen: set[str] = set()
    sequences: list[ScoreSequence] = []
    for line_no, obj in read_jsonl(path):
        episode_id = obj.get("episode_id")
        if not isinstance(episode_id, str):
            raise ScoreFileError(f"{path}: line {line_no}: missing 'episode_id'")
        if episode_id not in by_id:
            raise ScoreFileError(f"{path}: line {line_no}: unknown episode_id '{episode_id}'")
        if episode_id in seen:
            raise ScoreFileError(f"{path}: line {line_no}: duplicate episode_id '{episode_id}'")
        seen.add(episode_id)
        scores = obj.get("scores")
        if not isinstance(scores, list):
            raise ScoreFileError(f"{path}: line {line_no}: episode {episode_id}: missing 'scores' list")
        expected = len(by_id[episode_id].tokens)
        if len(scores) != expected:
            raise ScoreFileError(
                f"{path}: line {line_no}: episode {episode_id}: "
                f"{len(scores)} scores for {expected} tokens"
            )
        for i, value in enumerate(scores):
            if not isinstance(value, (int, float)) or isinstance(value, bool) or not 0.0 <= value <= 1.0:
                raise ScoreFileError(
                    f"{path}: line {line_no}: episode {episode_id}: "
                    f"score {value!r} at position {i} outside [0, 1]"
                )
        sequences.append(ScoreSequence(episode_id=episode_id, scores=tuple(float(v) for v in scores)))
    return sequences


def save_scores(sequences: Iterable[ScoreSequence], path: str | Path) -> None:
    write_jsonl(
        path,
        ({"episode_id": s.episode_id, "scores": list(s.scores)} for s in sequences),
    )


def load_score_file(path: str | Path) -> list[ScoreSequence]:
    """Load a score file without a corpus to validate lengths against."""
    sequences = []
    for line_no, obj in read_jsonl(path):
        episode_id = obj.get("episode_id")
        scores = obj.get("scores")
        if not isinstance(episode_id, str) or not isinstance(scores, list):
            raise ScoreFileError(f"{path}: line {line_no}: expected episode_id and scores")
        try:
            sequences.append(ScoreSequence(episode_id=episode_id, scores=tuple(float(v) for v in scores)))
        except (TypeError, ValueError) as exc:
            raise ScoreFileError(f"{path}: line {line_no}: {exc}") from exc
    return sequences


def save_model(model: LogisticModel, cfg: TrainConfig, path: str | Path) -> None:
    write_json(
        path,
        {
            "format": MODEL_FORMAT,
            "version": MODEL_VERSION,
            "dim": model.dim,
            "weights": [float(w) for w in model.weights],
            "bias": float(model.bias),
            "train_config": cfg.to_dict(),
        },
    )


def load_model(path: str | Path) -> tuple[LogisticModel, dict]:
    obj = read_json(path)
    if not isinstance(obj, dict) or obj.get("format") != MODEL_FORMAT:
        raise TrainError(f"{path}: not a {MODEL_FORMAT} model file")
    if obj.get("version") != MODEL_VERSION:
        raise TrainError(f"{path}: unsupported model version {obj.get('version')}")
    weights = np.array(obj["weights"], dtype=np.float64)
    if weights.shape != (obj["dim"],):
        raise TrainError(f"{path}: weight count {weights.shape[0]} does not match dim {obj['dim']}")
    model = LogisticModel(weights=weights, bias=float(obj["bias"]))
    return model, obj.get("train_config", {})

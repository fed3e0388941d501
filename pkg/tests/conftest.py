import numpy as np
import pytest

from introseg.corpus import Annotation, Token, TokenRange, TranscriptDoc


def make_doc(
    episode_id="ep1",
    program_id="prog1",
    texts=("alpha", "beta", "gamma", "delta"),
    annotations=(),
    timestamps=None,
):
    """Small transcript builder; timestamps is an optional list of start_ms."""
    tokens = []
    for i, text in enumerate(texts):
        start_ms = None if timestamps is None else timestamps[i]
        end_ms = None if timestamps is None else timestamps[i] + 200
        tokens.append(Token(text=text, index=i, start_ms=start_ms, end_ms=end_ms))
    return TranscriptDoc(
        episode_id=episode_id,
        program_id=program_id,
        tokens=tuple(tokens),
        annotations=tuple(annotations),
    )


def annotated_doc(episode_id, ranges, texts=None, timestamps=None, program_id="prog1"):
    """Doc with one annotation per entry of ranges; None means a 'none' vote."""
    n = (max(r[1] for r in ranges if r is not None) + 5) if any(r for r in ranges) else 10
    if texts is None:
        texts = tuple(f"w{i}" for i in range(n))
    annotations = [
        Annotation(annotator_id=f"a{i}", intro=TokenRange(*r) if r is not None else None)
        for i, r in enumerate(ranges)
    ]
    return make_doc(episode_id, program_id, texts, annotations, timestamps)


@pytest.fixture
def rng():
    return np.random.default_rng(20240816)

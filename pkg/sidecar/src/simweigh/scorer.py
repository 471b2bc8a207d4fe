"""Replace-and-rescore edit weighting.

For every column the hypothesis changed (or, when the hypothesis left a
needed fix alone, the chosen reference changed), a partially corrected
sentence X' is built by splicing that single chunk into the source X.
The weight is |F(X', R) - F(X, R)| where F is a greedy token-matching
F-score over contextual token embeddings against the chosen reference R.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dump_io import DumpSentence, TokenSeq


@dataclass(frozen=True)
class ScoredEdit:
    sentence_index: int
    column_index: int
    raw_delta: float
    weight: float  # == abs(raw_delta)


def build_partial(
    source: TokenSeq, span: tuple[int, int], replacement: TokenSeq
) -> TokenSeq:
    """Splice ``replacement`` over ``source[start:end]``; zero width inserts."""
    start, end = span
    if not (0 <= start <= end <= len(source)):
        raise ValueError(f"span {span} invalid for length {len(source)}")
    return source[:start] + tuple(replacement) + source[end:]


def _matching_f(x_emb: np.ndarray, r_emb: np.ndarray) -> float:
    if len(x_emb) == 0 and len(r_emb) == 0:
        return 1.0
    if len(x_emb) == 0 or len(r_emb) == 0:
        return 0.0
    sims = np.clip(x_emb @ r_emb.T, 0.0, 1.0)
    precision = float(sims.max(axis=1).mean())
    recall = float(sims.max(axis=0).mean())
    if precision + recall == 0.0:
        return 0.0
    return 2.0 * precision * recall / (precision + recall)


def score_pair(x: TokenSeq, r: TokenSeq, encoder) -> float:
    """Similarity of ``x`` against reference ``r`` in [0, 1]."""
    x_emb, r_emb = encoder.encode_batch([tuple(x), tuple(r)])
    return _matching_f(x_emb, r_emb)


def _column_replacement(sentence: DumpSentence, col) -> TokenSeq | None:
    """What to splice in at this column, or None when nothing changed.

    The hypothesis chunk wins when the hypothesis edited the column; a
    column the hypothesis skipped but the chosen reference edited scores
    the missed correction instead.
    """
    if col.hypothesis != col.source:
        return col.hypothesis
    ref_tokens = col.references[sentence.chosen_ref][1]
    if ref_tokens != col.source:
        return ref_tokens
    return None


def weigh_corpus(
    sentences: list[DumpSentence], encoder, batch_size: int = 32
) -> list[ScoredEdit]:
    if batch_size < 1:
        raise ValueError("batch_size must be >= 1")

    # plan every sequence we need before touching the encoder, so the
    # backend sees fixed-size batches regardless of sentence shape
    jobs: list[tuple[int, int, TokenSeq, TokenSeq, TokenSeq]] = []
    needed: list[TokenSeq] = []
    seen: set[TokenSeq] = set()

    def want(seq: TokenSeq) -> None:
        if seq not in seen:
            seen.add(seq)
            needed.append(seq)

    for sentence in sentences:
        source = sentence.source_tokens()
        reference = sentence.chosen_reference_tokens()
        spans = sentence.column_spans()
        for col, span in zip(sentence.columns, spans):
            replacement = _column_replacement(sentence, col)
            if replacement is None:
                continue
            partial = build_partial(source, span, replacement)
            jobs.append((sentence.index, col.index, source, reference, partial))
            want(source)
            want(reference)
            want(partial)

    embeddings: dict[TokenSeq, np.ndarray] = {}
    for start in range(0, len(needed), batch_size):
        batch = needed[start : start + batch_size]
        for seq, emb in zip(batch, encoder.encode_batch(batch)):
            embeddings[seq] = emb

    edits = []
    base_cache: dict[tuple[TokenSeq, TokenSeq], float] = {}
    for sentence_index, column_index, source, reference, partial in jobs:
        key = (source, reference)
        if key not in base_cache:
            base_cache[key] = _matching_f(embeddings[source], embeddings[reference])
        delta = _matching_f(embeddings[partial], embeddings[reference]) - base_cache[key]
        edits.append(
            ScoredEdit(
                sentence_index=sentence_index,
                column_index=column_index,
                raw_delta=delta,
                weight=abs(delta),
            )
        )
    return edits


def render_weight_file(edits: list[ScoredEdit], model_name: str) -> str:
    lines = [f"# simweigh model={model_name}"]
    for edit in edits:
        lines.append(f"{edit.sentence_index} {edit.column_index} {edit.weight:.6f}")
    return "\n".join(lines) + "\n"

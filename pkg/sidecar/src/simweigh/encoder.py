"""Token embedding backends for the similarity scorer.

Two backends share one interface (``encode_batch``): the default "local"
encoder is fully deterministic and self-contained — hashed character
n-gram features per token, mixed with the neighboring tokens so the same
word embeds differently in different contexts — and a checkpoint backend
that loads a local transformer directory when real contextual embeddings
are wanted.  Rows come back L2-normalized, one matrix per sequence.
"""

from __future__ import annotations

import zlib
from functools import lru_cache

import numpy as np

TokenSeq = tuple[str, ...]

LOCAL_MODEL = "local"

_DIM = 256
# longer n-grams dominate (weight n^2) so order-scrambled lookalikes such
# as "infrom"/"inform" stay far apart while shared stems still overlap
_NGRAM_SIZES = (3, 4, 5)
_CONTEXT_MIX = 0.6  # how much of each neighbor leaks into a token's vector


class EncoderError(RuntimeError):
    """Backend could not be constructed (bad name or unloadable checkpoint)."""


@lru_cache(maxsize=65536)
def _token_features(token: str) -> tuple[tuple[int, float], ...]:
    """Sparse hashed features: boundary-marked n-grams plus the whole word."""
    marked = f"^{token.lower()}$"
    feats: dict[int, float] = {}
    for n in _NGRAM_SIZES:
        for i in range(max(len(marked) - n + 1, 0)):
            h = zlib.crc32(f"{n}|{marked[i : i + n]}".encode())
            sign = float(n * n) if (h >> 17) & 1 else -float(n * n)
            idx = h % _DIM
            feats[idx] = feats.get(idx, 0.0) + sign
    # whole-word feature keeps case distinctions that lowercased n-grams drop
    h = zlib.crc32(f"w|{token}".encode())
    idx = h % _DIM
    feats[idx] = feats.get(idx, 0.0) + (2.0 if (h >> 17) & 1 else -2.0)
    return tuple(sorted(feats.items()))


def _base_vector(token: str) -> np.ndarray:
    v = np.zeros(_DIM)
    for idx, value in _token_features(token):
        v[idx] = value
    return v


class LocalEncoder:
    """Deterministic char-n-gram token encoder with neighbor mixing."""

    name = LOCAL_MODEL
    dim = _DIM

    def encode(self, tokens: TokenSeq) -> np.ndarray:
        if not tokens:
            return np.zeros((0, _DIM))
        base = np.stack([_base_vector(t) for t in tokens])
        mixed = base.copy()
        mixed[1:] += _CONTEXT_MIX * base[:-1]
        mixed[:-1] += _CONTEXT_MIX * base[1:]
        norms = np.linalg.norm(mixed, axis=1, keepdims=True)
        # hash-sign cancellation to an all-zero row is theoretically possible
        norms[norms < 1e-12] = 1.0
        return mixed / norms

    def encode_batch(self, sequences: list[TokenSeq]) -> list[np.ndarray]:
        return [self.encode(seq) for seq in sequences]


class CheckpointEncoder:
    """Word-level embeddings from a local transformers checkpoint directory.

    Sub-word pieces are mean-pooled back to whole tokens so the scorer sees
    one vector per input token, same as the local backend.
    """

    def __init__(self, model_path: str):
        try:
            import torch
            from transformers import AutoModel, AutoTokenizer
        except ImportError as exc:
            raise EncoderError(f"transformers backend unavailable: {exc}") from exc
        try:
            self._tokenizer = AutoTokenizer.from_pretrained(model_path)
            self._model = AutoModel.from_pretrained(model_path)
        except Exception as exc:
            raise EncoderError(f"cannot load checkpoint {model_path!r}: {exc}") from exc
        self._model.eval()
        self._torch = torch
        self.name = model_path
        self.dim = int(self._model.config.hidden_size)

    def encode_batch(self, sequences: list[TokenSeq]) -> list[np.ndarray]:
        non_empty = [list(seq) for seq in sequences if seq]
        out_iter = iter(self._encode_non_empty(non_empty)) if non_empty else iter(())
        return [
            next(out_iter) if seq else np.zeros((0, self.dim)) for seq in sequences
        ]

    def _encode_non_empty(self, batches: list[list[str]]) -> list[np.ndarray]:
        enc = self._tokenizer(
            batches,
            is_split_into_words=True,
            return_tensors="pt",
            padding=True,
            truncation=True,
        )
        with self._torch.no_grad():
            hidden = self._model(**enc).last_hidden_state
        results = []
        for row, words in enumerate(batches):
            word_ids = enc.word_ids(batch_index=row)
            vectors = []
            for w in range(len(words)):
                pieces = [i for i, wid in enumerate(word_ids) if wid == w]
                if pieces:
                    vectors.append(hidden[row, pieces].mean(dim=0).numpy())
                else:  # truncated away; keep the shape contract
                    vectors.append(np.zeros(hidden.shape[-1]))
            mat = np.stack(vectors)
            norms = np.linalg.norm(mat, axis=1, keepdims=True)
            norms[norms < 1e-12] = 1.0
            results.append(mat / norms)
        return results

    def encode(self, tokens: TokenSeq) -> np.ndarray:
        return self.encode_batch([tokens])[0]


def make_encoder(model: str):
    if model == LOCAL_MODEL:
        return LocalEncoder()
    return CheckpointEncoder(model)

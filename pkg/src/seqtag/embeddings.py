"""Pretrained word-vector loading and token-to-feature lookup.

Vectors are frozen features: no gradient ever flows into the matrix.
"""

from __future__ import annotations

import logging
import struct

import numpy as np

from .corpus import PAD, UNK, Corpus
from .errors import ParseError

logger = logging.getLogger(__name__)

_CACHE_MAGIC = b"EMB1"


class EmbeddingMatrix:
    """vocab_size x dim float64 matrix; rows 0/1 are the UNK/PAD zeros."""

    def __init__(self, dim: int, tokens: list[str], vectors: np.ndarray):
        self.dim = dim
        self.vectors = vectors
        self.token_index = {t: i for i, t in enumerate(tokens)}
        self.tokens = tokens

    @property
    def vocab_size(self) -> int:
        return self.vectors.shape[0]

    def lookup(self, token: str) -> np.ndarray:
        """Row for the lowercased token; UNK (zero) row when unseen."""
        return self.vectors[self.token_index.get(token.lower(), 0)]

    def encode_sentence(self, surfaces) -> np.ndarray:
        return np.stack([self.lookup(s) for s in surfaces])


def load_pretrained(path, dim: int) -> EmbeddingMatrix:
    """Read the whitespace 'word v1 ... vd' text format."""
    tokens = [UNK, PAD]
    rows = [np.zeros(dim), np.zeros(dim)]
    index = {UNK: 0, PAD: 1}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            parts = line.rstrip("\n").split()
            if not parts:
                continue
            if len(parts) != dim + 1:
                raise ParseError(
                    f"{path}:{lineno}: expected {dim + 1} fields, got {len(parts)}"
                )
            word = parts[0].lower()
            vec = np.array(parts[1:], dtype=np.float64)
            if word in index:
                logger.warning("duplicate embedding token %r at line %d; last wins", word, lineno)
                rows[index[word]] = vec
            else:
                index[word] = len(tokens)
                tokens.append(word)
                rows.append(vec)
    return EmbeddingMatrix(dim, tokens, np.stack(rows))


def random_embeddings(corpus: Corpus, dim: int, seed: int) -> EmbeddingMatrix:
    """Seeded random vectors for every corpus token; stand-in when no
    pretrained file is available (synthetic experiments)."""
    rng = np.random.default_rng(seed)
    vocab = sorted({tok.surface.lower() for s in corpus.sentences for tok in s.tokens})
    tokens = [UNK, PAD] + vocab
    vectors = rng.uniform(-0.5, 0.5, size=(len(tokens), dim))
    vectors[0] = 0.0
    vectors[1] = 0.0
    return EmbeddingMatrix(dim, tokens, vectors)


def save_cache(emb: EmbeddingMatrix, path):
    """Binary cache: magic 'EMB1', counts, token table, little-endian f64."""
    with open(path, "wb") as fh:
        fh.write(_CACHE_MAGIC)
        fh.write(struct.pack("<II", emb.vocab_size, emb.dim))
        for t in emb.tokens:
            raw = t.encode("utf-8")
            fh.write(struct.pack("<H", len(raw)))
            fh.write(raw)
        fh.write(emb.vectors.astype("<f8").tobytes())


def load_cache(path) -> EmbeddingMatrix:
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != _CACHE_MAGIC:
            raise ParseError(f"{path}: bad magic {magic!r}, expected {_CACHE_MAGIC!r}")
        n, dim = struct.unpack("<II", fh.read(8))
        tokens = []
        for _ in range(n):
            (ln,) = struct.unpack("<H", fh.read(2))
            tokens.append(fh.read(ln).decode("utf-8"))
        vectors = np.frombuffer(fh.read(n * dim * 8), dtype="<f8").reshape(n, dim).copy()
    return EmbeddingMatrix(dim, tokens, vectors)

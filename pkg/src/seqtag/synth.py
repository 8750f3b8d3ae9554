"""Deterministic synthetic imbalanced NER corpora.

Entity tokens come from type-specific lexicons (with a small shared-token
overlap) so types are learnable from surface cues; the strong:weak token
ratio is configurable (default 50:1). Tag sequences are BIO-valid by
construction.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .corpus import (DEFAULT_STRONG, DEFAULT_WEAK, Corpus, Sentence, TagSet,
                     Token)
from .errors import ConfigError

STRONG_TYPES = ("geo", "gpe", "tim", "org", "per")
WEAK_TYPES = ("art", "eve", "nat")


@dataclass
class SynthSpec:
    n_train: int = 5000
    n_val: int = 500
    n_test: int = 1000
    min_len: int = 4
    max_len: int = 10
    entity_prob: float = 0.4  # per-position chance of starting an entity
    two_token_prob: float = 0.3  # entity span length 2 instead of 1
    strong_weak_ratio: float = 50.0
    lexicon_size: int = 12
    shared_fraction: float = 0.05  # tokens shared across entity lexicons
    plain_vocab: int = 400
    seed: int = 0

    def __post_init__(self):
        if not 0 <= self.entity_prob <= 1 or self.strong_weak_ratio <= 0:
            raise ConfigError("infeasible synth spec frequencies")
        if self.min_len < 1 or self.max_len < self.min_len:
            raise ConfigError("invalid sentence length range")

    def type_frequencies(self) -> dict[str, float]:
        """Per-type share of entity tokens; strong:weak mass = ratio:1."""
        strong_mass = self.strong_weak_ratio / (self.strong_weak_ratio + 1.0)
        weak_mass = 1.0 - strong_mass
        freqs = {t: strong_mass / len(STRONG_TYPES) for t in STRONG_TYPES}
        freqs.update({t: weak_mass / len(WEAK_TYPES) for t in WEAK_TYPES})
        return freqs


def _lexicons(spec: SynthSpec, rng: np.random.Generator) -> dict[str, list[str]]:
    """Per-type lexicons with a small shared-token overlap.

    Shared tokens are pooled within the strong group and within the weak
    group separately, never across the boundary: type identity stays
    ambiguous for the overlap tokens, but rare-group presence remains
    decidable from the surface, so imbalance (not irreducible ambiguity)
    is the variable under study.
    """
    n_shared = max(1, int(round(spec.shared_fraction * spec.lexicon_size)))
    pools = {
        "s": [f"ambs{i:03d}" for i in range(n_shared * 2)],
        "w": [f"ambw{i:03d}" for i in range(n_shared * 2)],
    }
    lex = {}
    for ty in STRONG_TYPES + WEAK_TYPES:
        shared = pools["s" if ty in STRONG_TYPES else "w"]
        own = [f"{ty}{i:03d}" for i in range(spec.lexicon_size - n_shared)]
        picks = rng.choice(len(shared), size=n_shared, replace=False)
        lex[ty] = own + [shared[i] for i in picks]
    return lex


def _generate_split(spec: SynthSpec, n: int, rng: np.random.Generator,
                    lex, split_name: str) -> Corpus:
    types = list(STRONG_TYPES + WEAK_TYPES)
    freqs = spec.type_frequencies()
    probs = np.array([freqs[t] for t in types])
    probs = probs / probs.sum()
    sentences = []
    all_tags = set()
    for _ in range(n):
        length = int(rng.integers(spec.min_len, spec.max_len + 1))
        tokens: list[Token] = []
        while len(tokens) < length:
            if rng.random() < spec.entity_prob:
                ty = types[int(rng.choice(len(types), p=probs))]
                words = lex[ty]
                span = 2 if (rng.random() < spec.two_token_prob
                             and len(tokens) + 2 <= length) else 1
                tokens.append(Token(words[int(rng.integers(len(words)))], f"B-{ty}"))
                all_tags.add(f"B-{ty}")
                if span == 2:
                    tokens.append(Token(words[int(rng.integers(len(words)))], f"I-{ty}"))
                    all_tags.add(f"I-{ty}")
            else:
                tokens.append(Token(f"w{int(rng.integers(spec.plain_vocab)):04d}", "O"))
        sentences.append(Sentence(tokens))
    labels = ["O"] + sorted(all_tags)
    tagset = TagSet(labels, DEFAULT_STRONG, DEFAULT_WEAK)
    return Corpus(sentences, tagset, split_name)


def generate(spec: SynthSpec) -> tuple[Corpus, Corpus, Corpus]:
    """(train, val, test), bit-exactly reproducible from spec.seed."""
    lex_rng = np.random.default_rng(spec.seed)
    lex = _lexicons(spec, lex_rng)
    splits = []
    for offset, (name, n) in enumerate(
        [("train", spec.n_train), ("val", spec.n_val), ("test", spec.n_test)]
    ):
        rng = np.random.default_rng((spec.seed, offset + 1))
        splits.append(_generate_split(spec, n, rng, lex, name))
    # unify the tag inventory across splits
    labels = ["O"] + sorted(
        {t for c in splits for t in c.tagset.labels if t != "O"}
    )
    tagset = TagSet(labels, DEFAULT_STRONG, DEFAULT_WEAK)
    for c in splits:
        c.tagset = tagset
    return tuple(splits)

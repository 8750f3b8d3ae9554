"""Corpus ingestion, label statistics, masking, and detector datasets.

Tags may carry BIO prefixes (B-geo, I-geo). The type partition (strong /
weak) works on the bare type name, compared case-insensitively; full tags are
preserved for training.
"""

from __future__ import annotations

import csv
import random
from collections import Counter
from dataclasses import dataclass, field, replace

from .errors import DomainError, ParseError, VocabularyError

UNK = "<unk>"
PAD = "<pad>"

DEFAULT_STRONG = frozenset({"geo", "gpe", "tim", "org", "per"})
DEFAULT_WEAK = frozenset({"art", "eve", "nat"})


def tag_type(tag: str) -> str:
    """Strip a BIO prefix: 'B-geo' -> 'geo', 'O' -> 'O'."""
    if len(tag) > 2 and tag[1] == "-" and tag[0] in "BIbi":
        return tag[2:]
    return tag


@dataclass(frozen=True)
class Token:
    surface: str
    gold_tag: str


@dataclass
class Sentence:
    tokens: list[Token]
    detector_label: int | None = None

    def __len__(self):
        return len(self.tokens)

    def tags(self) -> list[str]:
        return [t.gold_tag for t in self.tokens]

    def surfaces(self) -> list[str]:
        return [t.surface for t in self.tokens]


@dataclass
class TagSet:
    """Full tag inventory plus the strong/weak type partition.

    labels[0] is always 'O'; START and END sentinels sit at indices K and
    K+1 and are never emitted.
    """

    labels: list[str]
    strong: frozenset[str] = DEFAULT_STRONG
    weak: frozenset[str] = DEFAULT_WEAK

    def __post_init__(self):
        if not self.labels or self.labels[0] != "O":
            raise ValueError("TagSet labels must start with 'O'")
        self.strong = frozenset(s.lower() for s in self.strong)
        self.weak = frozenset(s.lower() for s in self.weak)
        if self.strong & self.weak:
            raise ValueError("strong and weak type sets overlap")
        self._index = {t: i for i, t in enumerate(self.labels)}

    @property
    def K(self) -> int:
        return len(self.labels)

    @property
    def start_index(self) -> int:
        return self.K

    @property
    def end_index(self) -> int:
        return self.K + 1

    def index(self, tag: str) -> int:
        try:
            return self._index[tag]
        except KeyError:
            raise VocabularyError(f"tag {tag!r} not in tag inventory") from None

    def is_weak(self, tag: str) -> bool:
        return tag_type(tag).lower() in self.weak

    def is_strong(self, tag: str) -> bool:
        return tag_type(tag).lower() in self.strong

    def type_names(self) -> list[str]:
        seen, out = set(), []
        for t in self.labels:
            ty = tag_type(t)
            if ty not in seen:
                seen.add(ty)
                out.append(ty)
        return out


@dataclass
class Corpus:
    sentences: list[Sentence]
    tagset: TagSet
    split_name: str = "train"

    def __len__(self):
        return len(self.sentences)


def _tagset_from_tags(tags, strong=DEFAULT_STRONG, weak=DEFAULT_WEAK) -> TagSet:
    labels = ["O"] + sorted(t for t in set(tags) if t != "O")
    return TagSet(labels, strong, weak)


def load_corpus(path, fmt="conll-2col", strong=DEFAULT_STRONG, weak=DEFAULT_WEAK,
                split_name="train", tagset: TagSet | None = None) -> Corpus:
    """Read an annotated file. fmt is 'conll-2col' or 'csv-sentence'.

    If ``tagset`` is given it is frozen: unknown tags raise VocabularyError.
    """
    if fmt == "conll-2col":
        sentences, tags = _read_conll(path)
    elif fmt == "csv-sentence":
        sentences, tags = _read_csv(path)
    else:
        raise ParseError(f"unknown corpus format {fmt!r}")
    if tagset is None:
        tagset = _tagset_from_tags(tags, strong, weak)
    else:
        for t in tags:
            tagset.index(t)
    return Corpus(sentences, tagset, split_name)


def _read_conll(path):
    sentences, tags, current = [], [], []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.rstrip("\n")
            if line.startswith("#seqtag "):
                continue
            if not line.strip():
                if current:
                    sentences.append(Sentence(current))
                    current = []
                continue
            parts = line.split("\t")
            if len(parts) != 2 or not parts[0]:
                raise ParseError(f"{path}:{lineno}: expected 'surface<TAB>tag', got {line!r}")
            current.append(Token(parts[0], parts[1]))
            tags.append(parts[1])
    if current:
        sentences.append(Sentence(current))
    return sentences, tags


def _read_csv(path):
    sentences, tags = [], []
    current, current_id = [], None
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            return [], []
        for lineno, row in enumerate(reader, 2):
            if len(row) != 3:
                raise ParseError(f"{path}:{lineno}: expected 3 columns, got {len(row)}")
            sid, surface, tag = row
            if not surface:
                raise ParseError(f"{path}:{lineno}: empty surface form")
            if sid != current_id and current:
                sentences.append(Sentence(current))
                current = []
            current_id = sid
            current.append(Token(surface, tag))
            tags.append(tag)
    if current:
        sentences.append(Sentence(current))
    return sentences, tags


def write_corpus(corpus: Corpus, path, predictions=None):
    """Emit conll-2col, or conll-3col when per-sentence predictions given."""
    with open(path, "w", encoding="utf-8") as fh:
        for si, sent in enumerate(corpus.sentences):
            for ti, tok in enumerate(sent.tokens):
                if predictions is None:
                    fh.write(f"{tok.surface}\t{tok.gold_tag}\n")
                else:
                    fh.write(f"{tok.surface}\t{tok.gold_tag}\t{predictions[si][ti]}\n")
            fh.write("\n")


def label_histogram(corpus: Corpus) -> dict[str, int]:
    """Token counts per bare type (BIO prefixes stripped)."""
    counts: Counter[str] = Counter()
    for sent in corpus.sentences:
        for tok in sent.tokens:
            counts[tag_type(tok.gold_tag)] += 1
    return dict(counts)


def strong_weak_ratio(corpus: Corpus) -> float:
    hist = label_histogram(corpus)
    ts = corpus.tagset
    strong = sum(n for ty, n in hist.items() if ty.lower() in ts.strong)
    weak = sum(n for ty, n in hist.items() if ty.lower() in ts.weak)
    if weak == 0:
        raise DomainError("no weak-type tokens in corpus")
    return strong / weak


def stats_report(corpus: Corpus) -> str:
    hist = label_histogram(corpus)
    lines = ["Label      Count", "----------------"]
    for ty, n in sorted(hist.items(), key=lambda kv: (-kv[1], kv[0])):
        lines.append(f"{ty:<10} {n}")
    lines.append("----------------")
    lines.append(f"{'total':<10} {sum(hist.values())}")
    return "\n".join(lines) + "\n"


def mask_labels(corpus: Corpus, keep: str) -> Corpus:
    """Relabel every token whose type is outside ``keep`` to 'O'.

    keep is 'strong' or 'weak'. The returned corpus has a tag inventory
    rebuilt from the surviving tags; the input corpus is untouched.
    """
    if keep not in ("strong", "weak"):
        raise ValueError(f"keep must be 'strong' or 'weak', got {keep!r}")
    kept = corpus.tagset.strong if keep == "strong" else corpus.tagset.weak
    new_sentences, tags = [], []
    for sent in corpus.sentences:
        toks = []
        for tok in sent.tokens:
            tag = tok.gold_tag if tag_type(tok.gold_tag).lower() in kept else "O"
            toks.append(Token(tok.surface, tag))
            tags.append(tag)
        new_sentences.append(Sentence(toks, sent.detector_label))
    tagset = _tagset_from_tags(tags, corpus.tagset.strong, corpus.tagset.weak)
    return Corpus(new_sentences, tagset, corpus.split_name)


def detector_labels(corpus: Corpus) -> Corpus:
    """Label each sentence 1 iff it contains any weak-type token."""
    ts = corpus.tagset
    sentences = [
        replace(s, detector_label=int(any(ts.is_weak(t.gold_tag) for t in s.tokens)))
        for s in corpus.sentences
    ]
    return Corpus(sentences, corpus.tagset, corpus.split_name)


def balanced_subsample(corpus: Corpus, seed: int) -> Corpus:
    """Keep all positives; subsample negatives (without replacement) to match."""
    pos = [s for s in corpus.sentences if s.detector_label == 1]
    neg = [s for s in corpus.sentences if s.detector_label == 0]
    if not pos:
        raise DomainError("balanced_subsample: no positive sentences")
    rng = random.Random(seed)
    if len(neg) > len(pos):
        neg = rng.sample(neg, len(pos))
    sentences = pos + neg
    rng.shuffle(sentences)
    return Corpus(sentences, corpus.tagset, corpus.split_name)


@dataclass
class Vocabulary:
    """Lowercased token inventory; index 0 is UNK, 1 is PAD."""

    tokens: list[str] = field(default_factory=lambda: [UNK, PAD])

    def __post_init__(self):
        self._index = {t: i for i, t in enumerate(self.tokens)}

    def __len__(self):
        return len(self.tokens)

    def index(self, surface: str) -> int:
        return self._index.get(surface.lower(), 0)

    def __contains__(self, surface):
        return surface.lower() in self._index


def build_vocab(corpus: Corpus, min_freq: int = 1) -> Vocabulary:
    counts: Counter[str] = Counter()
    for sent in corpus.sentences:
        for tok in sent.tokens:
            counts[tok.surface.lower()] += 1
    kept = sorted(t for t, n in counts.items() if n >= min_freq)
    return Vocabulary([UNK, PAD] + kept)

"""Binary weak-class presence detector: Bi-LSTM over embeddings, multi-width
1-D convolutions with max-over-time pooling, and a 2-way softmax trained with
a class-weighted cross entropy.

The loss weights are cross-assigned occurrence frequencies: the majority
class gets the small weight, so errors on the rare positive class dominate.
"""

from __future__ import annotations

import copy
import logging
from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor
from .corpus import PAD, Corpus, Sentence
from .embeddings import EmbeddingMatrix
from .encoder import LstmParams, bilstm_encode, init_lstm
from .errors import DomainError, TrainingError

logger = logging.getLogger(__name__)

CLAMP = 1e-12
clamp_warnings = 0  # incremented whenever a score had to be clamped


@dataclass
class ClassWeights:
    w0: float
    w1: float

    def __post_init__(self):
        if self.w0 <= 0 or self.w1 <= 0:
            raise DomainError("class weights must be positive")
        total = self.w0 + self.w1
        self.w0 /= total
        self.w1 /= total


def compute_class_weights(corpus: Corpus) -> ClassWeights:
    """w0 = n1/(n0+n1), w1 = n0/(n0+n1); requires detector labels."""
    n0 = sum(1 for s in corpus.sentences if s.detector_label == 0)
    n1 = sum(1 for s in corpus.sentences if s.detector_label == 1)
    if n0 == 0 or n1 == 0:
        raise DomainError(f"both classes required, got n0={n0}, n1={n1}")
    return ClassWeights(w0=n1 / (n0 + n1), w1=n0 / (n0 + n1))


@dataclass
class DetectorParams:
    fwd: LstmParams
    bwd: LstmParams
    conv_w: dict[int, Tensor]  # width -> (filters, width*2h)
    conv_b: dict[int, Tensor]  # width -> (filters,)
    w_cls: Tensor  # 2 x (n_widths * filters)
    b_cls: Tensor  # 2

    def tensors(self):
        out = self.fwd.tensors() + self.bwd.tensors()
        for w in sorted(self.conv_w):
            out += [self.conv_w[w], self.conv_b[w]]
        return out + [self.w_cls, self.b_cls]

    def clone(self) -> "DetectorParams":
        return copy.deepcopy(self)


def init_detector(dim: int, hidden: int, widths, filters: int,
                  rng: np.random.Generator) -> DetectorParams:
    widths = tuple(widths)
    conv_w = {
        w: ad.parameter((filters, w * 2 * hidden), rng, name=f"det.conv{w}.w")
        for w in widths
    }
    conv_b = {
        w: Tensor(np.zeros(filters), requires_grad=True, name=f"det.conv{w}.b")
        for w in widths
    }
    return DetectorParams(
        fwd=init_lstm(dim, hidden, rng, prefix="det.fwd"),
        bwd=init_lstm(dim, hidden, rng, prefix="det.bwd"),
        conv_w=conv_w,
        conv_b=conv_b,
        w_cls=ad.parameter((2, len(widths) * filters), rng, name="det.cls.w"),
        b_cls=Tensor(np.zeros(2), requires_grad=True, name="det.cls.b"),
    )


def _conv_pool(hidden: Tensor, weight: Tensor, bias: Tensor, width: int) -> Tensor:
    """Width-w convolution over time + ReLU + max-over-time -> (filters,)."""
    T = hidden.shape[0]
    w_eff = min(width, T)
    if w_eff < width:
        # short sentence: use the leading slice of each filter
        weight = weight[:, : w_eff * hidden.shape[1]]
    windows = ad.concat([hidden[i : T - w_eff + 1 + i, :] for i in range(w_eff)], axis=1)
    feat = ad.relu(windows @ ad.transpose(weight) + bias)
    return ad.tmax(feat, axis=0)


def detector_logits(vectors: Tensor, params: DetectorParams) -> Tensor:
    """(T,d) token vectors -> (1,2) class logits."""
    hidden = bilstm_encode(vectors, params.fwd, params.bwd)
    pooled = ad.concat(
        [_conv_pool(hidden, params.conv_w[w], params.conv_b[w], w)
         for w in sorted(params.conv_w)],
        axis=0,
    )
    return ad.reshape(pooled, (1, -1)) @ ad.transpose(params.w_cls) + params.b_cls


def _sentence_vectors(sentence: Sentence, emb: EmbeddingMatrix) -> Tensor:
    surfaces = [s for s in sentence.surfaces() if s.lower() != PAD]
    if not surfaces:
        raise DomainError("detector_forward on an empty sentence")
    return Tensor(emb.encode_sentence(surfaces))


def detector_forward(sentence: Sentence, emb: EmbeddingMatrix,
                     params: DetectorParams) -> tuple[float, float]:
    """Softmax scores (s0, s1); trailing/interior PAD tokens are ignored."""
    logits = detector_logits(_sentence_vectors(sentence, emb), params).data[0]
    m = logits.max()
    e = np.exp(logits - m)
    s = e / e.sum()
    return float(s[0]), float(s[1])


def weighted_bce(s0: float, s1: float, target: int, weights: ClassWeights) -> float:
    """-w0*t0*ln(s0) - w1*t1*ln(s1) with one-hot target; scores clamped at 1e-12."""
    global clamp_warnings
    s = s1 if target == 1 else s0
    if s < CLAMP:
        clamp_warnings += 1
        logger.warning("score %.3g clamped to %.0e in weighted_bce", s, CLAMP)
        s = CLAMP
    w = weights.w1 if target == 1 else weights.w0
    return -w * float(np.log(s))


def weighted_bce_logits(logits: Tensor, target: int, weights: ClassWeights) -> Tensor:
    """Differentiable weighted cross entropy straight from (1,2) logits."""
    logp = logits - ad.reshape(ad.log_sum_exp(logits, axis=1), (1, 1))
    w = weights.w1 if target == 1 else weights.w0
    return ad.tsum(logp[(np.array([0]), np.array([target]))]) * (-w)


def predict_label(sentence: Sentence, emb: EmbeddingMatrix, params: DetectorParams,
                  threshold: float = 0.5) -> int:
    _, s1 = detector_forward(sentence, emb, params)
    return int(s1 >= threshold)


def detector_class_accuracy(params: DetectorParams, emb: EmbeddingMatrix,
                            corpus: Corpus, threshold: float = 0.5):
    """Per-class accuracy; None when a class has no examples."""
    correct = {0: 0, 1: 0}
    total = {0: 0, 1: 0}
    for sent in corpus.sentences:
        gold = sent.detector_label
        pred = predict_label(sent, emb, params, threshold)
        total[gold] += 1
        if pred == gold:
            correct[gold] += 1
    acc0 = correct[0] / total[0] if total[0] else None
    acc1 = correct[1] / total[1] if total[1] else None
    return acc0, acc1


@dataclass
class DetectorConfig:
    hidden: int = 16
    widths: tuple = (2, 3, 4)
    filters: int = 50
    lr: float = 0.1
    clip: float = 5.0
    epochs: int = 5
    seed: int = 0
    weighted: bool = True
    threshold: float = 0.5


def train_detector(train: Corpus, val: Corpus, emb: EmbeddingMatrix,
                   config: DetectorConfig):
    """Per-sentence SGD; keeps the checkpoint of the epoch with the best
    validation balanced accuracy (mean of the per-class accuracies).
    Returns (params, log_lines).

    Selecting on class-1 accuracy alone degenerates under heavy imbalance:
    an epoch that predicts everything positive scores a perfect 1.0 and
    permanently shadows every genuine separator, so the majority-class
    accuracy must enter the selection on equal footing.
    """
    rng = np.random.default_rng(config.seed)
    params = init_detector(emb.dim, config.hidden, config.widths, config.filters, rng)
    if config.weighted:
        weights = compute_class_weights(train)
    else:
        weights = ClassWeights(0.5, 0.5)
    tensors = params.tensors()
    order = np.arange(len(train.sentences))
    log_lines = ["epoch,loss,acc0,acc1"]
    best = params.clone()
    best_key = -1.0
    for epoch in range(1, config.epochs + 1):
        rng.shuffle(order)
        total_loss = 0.0
        for idx in order:
            sent = train.sentences[idx]
            logits = detector_logits(_sentence_vectors(sent, emb), params)
            loss = weighted_bce_logits(logits, sent.detector_label, weights)
            if not np.isfinite(loss.data):
                raise TrainingError(f"non-finite detector loss at epoch {epoch}")
            ad.backward(loss, tensors)
            ad.sgd_step(tensors, config.lr, config.clip)
            total_loss += float(loss.data)
        acc0, acc1 = detector_class_accuracy(params, emb, val, config.threshold)
        log_lines.append(
            f"{epoch},{total_loss / len(order):.6f},"
            f"{-1.0 if acc0 is None else acc0:.4f},{-1.0 if acc1 is None else acc1:.4f}"
        )
        key = ((acc0 if acc0 is not None else 0.0)
               + (acc1 if acc1 is not None else 0.0)) / 2.0
        if key > best_key:
            best_key = key
            best = params.clone()
    return best, log_lines

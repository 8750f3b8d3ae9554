"""Tagger training and the three prediction configurations:

  single   one tagger over all classes (plain Viterbi output)
  double   strong + weak taggers, position-wise vote on every sentence
  adaptive strong + weak taggers, vote only on sentences the binary
           detector flags as containing a weak-class entity

The vote prefers non-O tags; when both taggers claim a non-O tag at the same
position, the model more confident in its own predicted tag (CRF posterior
marginal) wins, ties going to the strong tagger.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from . import crf as crf_mod
from . import metrics
from .autodiff import Tensor
from .checkpoint import load_checkpoint, save_checkpoint
from .corpus import Corpus, Sentence, TagSet, mask_labels
from .detector import (DetectorConfig, DetectorParams,
                       predict_label)
from .embeddings import EmbeddingMatrix
from .encoder import (EmissionParams, LstmParams, bilstm_encode,
                      emission_scores, init_emission, init_lstm)
from .errors import ConfigError, ContractError, TrainingError

logger = logging.getLogger(__name__)


@dataclass
class Prediction:
    tags: list[str]
    confidence: np.ndarray  # posterior marginal of the predicted tag, per position
    marginals: np.ndarray  # T x K


@dataclass
class TaggerConfig:
    hidden: int = 16
    lr: float = 0.1
    clip: float = 5.0
    epochs: int = 5
    seed: int = 0


@dataclass
class TaggerModel:
    emb: EmbeddingMatrix
    fwd: LstmParams
    bwd: LstmParams
    emission: EmissionParams
    crf: crf_mod.CrfParams
    tagset: TagSet

    def tensors(self):
        return (self.fwd.tensors() + self.bwd.tensors()
                + self.emission.tensors() + self.crf.tensors())

    def emissions(self, sentence: Sentence) -> Tensor:
        x = Tensor(self.emb.encode_sentence(sentence.surfaces()))
        hidden = bilstm_encode(x, self.fwd, self.bwd)
        return emission_scores(hidden, self.emission)

    def loss(self, sentence: Sentence) -> Tensor:
        P = self.emissions(sentence)
        y = [self.tagset.index(t.gold_tag) for t in sentence.tokens]
        return crf_mod.nll(P, self.crf, y)

    def predict(self, sentence: Sentence) -> Prediction:
        P = self.emissions(sentence)
        path, _ = crf_mod.viterbi(P, self.crf)
        marg = crf_mod.posterior_marginals(P, self.crf)
        conf = marg[np.arange(len(path)), path]
        return Prediction([self.tagset.labels[i] for i in path], conf, marg)


def init_tagger(emb: EmbeddingMatrix, tagset: TagSet, hidden: int,
                rng: np.random.Generator) -> TaggerModel:
    K = tagset.K
    return TaggerModel(
        emb=emb,
        fwd=init_lstm(emb.dim, hidden, rng, prefix="tag.fwd"),
        bwd=init_lstm(emb.dim, hidden, rng, prefix="tag.bwd"),
        emission=init_emission(K, hidden, rng),
        crf=crf_mod.init_crf(K, rng),
        tagset=tagset,
    )


def _val_weighted_f1(model: TaggerModel, val: Corpus) -> float:
    counts = metrics.ConfusionCounts()
    for sent in val.sentences:
        pred = model.predict(sent)
        counts = counts.merge(metrics.count_confusion(pred.tags, sent.tags()))
    classes = counts.classes()
    if not classes:
        return 0.0
    f1s = metrics.per_class_f1(counts)
    supports = [counts.support.get(c, 0) for c in classes]
    if sum(supports) == 0:
        return 0.0
    return metrics.f1_weighted([f1s[c] for c in classes], supports)


def train_tagger(train: Corpus, val: Corpus, keep: str, config: TaggerConfig,
                 emb: EmbeddingMatrix):
    """Train a Bi-LSTM-CRF on the corpus (masked per ``keep``).

    keep: 'all' (no masking), 'strong', or 'weak'. Best epoch selected by
    validation weighted F1 over non-O classes. Returns (model, log_lines).
    """
    if keep not in ("all", "strong", "weak"):
        raise ConfigError(f"keep must be all|strong|weak, got {keep!r}")
    if keep != "all":
        train = mask_labels(train, keep)
        val = mask_labels(val, keep)
    if train.tagset.K < 2:
        raise ConfigError(f"effective label set too small for keep={keep!r}")
    rng = np.random.default_rng(config.seed)
    model = init_tagger(emb, train.tagset, config.hidden, rng)
    tensors = model.tensors()
    mask = model.crf.sentinel_mask()
    order = np.arange(len(train.sentences))
    log_lines = ["epoch,loss,val_weighted_f1"]
    best_state = [np.copy(t.data) for t in tensors]
    best_f1 = -1.0
    for epoch in range(1, config.epochs + 1):
        rng.shuffle(order)
        total = 0.0
        for idx in order:
            loss = model.loss(train.sentences[idx])
            if not np.isfinite(loss.data):
                raise TrainingError(f"non-finite tagger loss at epoch {epoch}")
            ad.backward(loss, tensors)
            model.crf.trans.grad[mask] = 0.0
            ad.sgd_step(tensors, config.lr, config.clip)
            model.crf.trans.data[mask] = crf_mod.NEG_INF
            total += float(loss.data)
        f1 = _val_weighted_f1(model, val)
        log_lines.append(f"{epoch},{total / len(order):.6f},{f1:.6f}")
        if f1 > best_f1:
            best_f1 = f1
            best_state = [np.copy(t.data) for t in tensors]
    for t, d in zip(tensors, best_state):
        t.data = d
    return model, log_lines


# ---------------------------------------------------------------------------
# voting merge and the gated pipeline


def merge_positionwise(strong: Prediction, weak: Prediction) -> list[str]:
    """Position-wise vote per the non-O preference + confidence-argmax rule."""
    if len(strong.tags) != len(weak.tags):
        raise ContractError(
            f"merge_positionwise: length mismatch {len(strong.tags)} vs {len(weak.tags)}"
        )
    out = []
    for i, (st, wt) in enumerate(zip(strong.tags, weak.tags)):
        if st == "O":
            out.append(wt)
        elif wt == "O":
            out.append(st)
        elif weak.confidence[i] > strong.confidence[i]:
            out.append(wt)
        else:
            if weak.confidence[i] == strong.confidence[i]:
                logger.info("merge tie at position %d; keeping strong tag %r", i, st)
            out.append(st)
    return out


@dataclass
class Pipeline:
    mode: str  # single | double | adaptive
    single: TaggerModel | None = None
    strong: TaggerModel | None = None
    weak: TaggerModel | None = None
    detector: DetectorParams | None = None
    detector_emb: EmbeddingMatrix | None = None
    threshold: float = 0.5

    def __post_init__(self):
        if self.mode not in ("single", "double", "adaptive"):
            raise ConfigError(f"unknown pipeline mode {self.mode!r}")
        if self.mode == "single" and self.single is None:
            raise ConfigError("single mode requires the all-classes tagger")
        if self.mode in ("double", "adaptive") and (self.strong is None or self.weak is None):
            raise ConfigError(f"{self.mode} mode requires strong and weak taggers")
        if self.mode == "adaptive" and self.detector is None:
            raise ConfigError("adaptive mode requires a detector checkpoint")

    def predict(self, sentence: Sentence) -> list[str]:
        if self.mode == "single":
            return self.single.predict(sentence).tags
        if self.mode == "double":
            gate = 1
        else:
            gate = predict_label(sentence, self.detector_emb, self.detector, self.threshold)
        strong_pred = self.strong.predict(sentence)
        if gate == 0:
            return strong_pred.tags
        return merge_positionwise(strong_pred, self.weak.predict(sentence))

    def predict_corpus(self, corpus: Corpus) -> list[list[str]]:
        return [self.predict(s) for s in corpus.sentences]


# ---------------------------------------------------------------------------
# checkpoint glue


def _lstm_arrays(prefix, p: LstmParams):
    return {f"{prefix}.w_ih": p.w_ih.data, f"{prefix}.w_hh": p.w_hh.data,
            f"{prefix}.b": p.b.data}


def _lstm_from(prefix, arrays) -> LstmParams:
    return LstmParams(
        Tensor(arrays[f"{prefix}.w_ih"], requires_grad=True, name=f"{prefix}.w_ih"),
        Tensor(arrays[f"{prefix}.w_hh"], requires_grad=True, name=f"{prefix}.w_hh"),
        Tensor(arrays[f"{prefix}.b"], requires_grad=True, name=f"{prefix}.b"),
    )


def save_tagger(path, model: TaggerModel, config: TaggerConfig):
    meta = {
        "model": "tagger",
        "labels": model.tagset.labels,
        "strong": sorted(model.tagset.strong),
        "weak": sorted(model.tagset.weak),
        "emb_tokens": model.emb.tokens,
        "dim": model.emb.dim,
        "config": {"hidden": config.hidden, "lr": config.lr, "clip": config.clip,
                   "epochs": config.epochs, "seed": config.seed},
    }
    arrays = {"emb.vectors": model.emb.vectors,
              "emit.w_out": model.emission.w_out.data,
              "emit.b_out": model.emission.b_out.data,
              "crf.trans": model.crf.trans.data}
    arrays.update(_lstm_arrays("fwd", model.fwd))
    arrays.update(_lstm_arrays("bwd", model.bwd))
    save_checkpoint(path, meta, arrays)


def load_tagger(path) -> TaggerModel:
    meta, arrays = load_checkpoint(path)
    if meta.get("model") != "tagger":
        raise ConfigError(f"{path}: not a tagger checkpoint")
    emb = EmbeddingMatrix(meta["dim"], meta["emb_tokens"], arrays["emb.vectors"])
    tagset = TagSet(meta["labels"], frozenset(meta["strong"]), frozenset(meta["weak"]))
    return TaggerModel(
        emb=emb,
        fwd=_lstm_from("fwd", arrays),
        bwd=_lstm_from("bwd", arrays),
        emission=EmissionParams(
            Tensor(arrays["emit.w_out"], requires_grad=True, name="emit.w_out"),
            Tensor(arrays["emit.b_out"], requires_grad=True, name="emit.b_out"),
        ),
        crf=crf_mod.CrfParams(
            Tensor(arrays["crf.trans"], requires_grad=True, name="crf.trans")
        ),
        tagset=tagset,
    )


def save_detector(path, params: DetectorParams, emb: EmbeddingMatrix,
                  config: DetectorConfig):
    meta = {
        "model": "detector",
        "emb_tokens": emb.tokens,
        "dim": emb.dim,
        "hidden": params.fwd.hidden,
        "widths": sorted(params.conv_w),
        "filters": params.conv_w[sorted(params.conv_w)[0]].shape[0],
        "config": {"lr": config.lr, "clip": config.clip, "epochs": config.epochs,
                   "seed": config.seed, "weighted": config.weighted,
                   "threshold": config.threshold},
    }
    arrays = {"emb.vectors": emb.vectors,
              "cls.w": params.w_cls.data, "cls.b": params.b_cls.data}
    arrays.update(_lstm_arrays("fwd", params.fwd))
    arrays.update(_lstm_arrays("bwd", params.bwd))
    for w in sorted(params.conv_w):
        arrays[f"conv{w}.w"] = params.conv_w[w].data
        arrays[f"conv{w}.b"] = params.conv_b[w].data
    save_checkpoint(path, meta, arrays)


def load_detector(path):
    """Returns (params, emb, threshold)."""
    meta, arrays = load_checkpoint(path)
    if meta.get("model") != "detector":
        raise ConfigError(f"{path}: not a detector checkpoint")
    emb = EmbeddingMatrix(meta["dim"], meta["emb_tokens"], arrays["emb.vectors"])
    widths = [int(w) for w in meta["widths"]]
    params = DetectorParams(
        fwd=_lstm_from("fwd", arrays),
        bwd=_lstm_from("bwd", arrays),
        conv_w={w: Tensor(arrays[f"conv{w}.w"], requires_grad=True) for w in widths},
        conv_b={w: Tensor(arrays[f"conv{w}.b"], requires_grad=True) for w in widths},
        w_cls=Tensor(arrays["cls.w"], requires_grad=True),
        b_cls=Tensor(arrays["cls.b"], requires_grad=True),
    )
    return params, emb, float(meta["config"].get("threshold", 0.5))


def load_pipeline_config(path) -> dict:
    """key=value text file; '#' starts a comment."""
    out = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected key=value, got {line!r}")
            key, value = line.split("=", 1)
            out[key.strip()] = value.strip()
    return out


def build_pipeline(cfg: dict) -> Pipeline:
    mode = cfg.get("mode", "single")
    kwargs = {"mode": mode, "threshold": float(cfg.get("threshold", 0.5))}
    if mode == "single":
        if "single_checkpoint" not in cfg:
            raise ConfigError("single mode needs single_checkpoint=")
        kwargs["single"] = load_tagger(cfg["single_checkpoint"])
    else:
        for key in ("strong_checkpoint", "weak_checkpoint"):
            if key not in cfg:
                raise ConfigError(f"{mode} mode needs {key}=")
        kwargs["strong"] = load_tagger(cfg["strong_checkpoint"])
        kwargs["weak"] = load_tagger(cfg["weak_checkpoint"])
        if mode == "adaptive":
            if "detector_checkpoint" not in cfg:
                raise ConfigError("adaptive mode needs detector_checkpoint=")
            det, demb, thr = load_detector(cfg["detector_checkpoint"])
            kwargs["detector"] = det
            kwargs["detector_emb"] = demb
            if "threshold" not in cfg:
                kwargs["threshold"] = thr
    return Pipeline(**kwargs)

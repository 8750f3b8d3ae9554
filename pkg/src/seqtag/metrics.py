"""Token-level precision/recall/F1 with global (micro), macro, and
support-weighted aggregation, plus the per-class report table.

Scoring is type-level: BIO prefixes are stripped and class 'O' is excluded
from all entity metrics. A precision/recall with a zero denominator is
reported as undefined ('undef'); inside the macro average an undefined F1
counts as 0 and the affected classes are listed in the report footer.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .corpus import Corpus, tag_type
from .errors import ContractError, DomainError


@dataclass
class ConfusionCounts:
    tp: dict[str, int] = field(default_factory=dict)
    fp: dict[str, int] = field(default_factory=dict)
    fn: dict[str, int] = field(default_factory=dict)
    support: dict[str, int] = field(default_factory=dict)

    def classes(self):
        seen = set(self.tp) | set(self.fp) | set(self.fn) | set(self.support)
        return sorted(seen)

    def merge(self, other: "ConfusionCounts") -> "ConfusionCounts":
        out = ConfusionCounts()
        for src in (self, other):
            for attr in ("tp", "fp", "fn", "support"):
                dst = getattr(out, attr)
                for c, n in getattr(src, attr).items():
                    dst[c] = dst.get(c, 0) + n
        return out


def count_confusion(pred_tags, gold_tags) -> ConfusionCounts:
    """Token-level counts over bare types; 'O' never enters the counts."""
    if len(pred_tags) != len(gold_tags):
        raise ContractError(
            f"count_confusion: length mismatch {len(pred_tags)} vs {len(gold_tags)}"
        )
    counts = ConfusionCounts()
    for p, g in zip(pred_tags, gold_tags):
        pt, gt = tag_type(p), tag_type(g)
        if gt != "O":
            counts.support[gt] = counts.support.get(gt, 0) + 1
        if pt == gt:
            if gt != "O":
                counts.tp[gt] = counts.tp.get(gt, 0) + 1
        else:
            if gt != "O":
                counts.fn[gt] = counts.fn.get(gt, 0) + 1
            if pt != "O":
                counts.fp[pt] = counts.fp.get(pt, 0) + 1
    return counts


def count_confusion_corpora(pred_corpus: Corpus, gold_corpus: Corpus) -> ConfusionCounts:
    if len(pred_corpus) != len(gold_corpus):
        raise ContractError("corpora have different sentence counts")
    total = ConfusionCounts()
    for ps, gs in zip(pred_corpus.sentences, gold_corpus.sentences):
        total = total.merge(count_confusion(ps.tags(), gs.tags()))
    return total


def _prf(tp: int, fp: int, fn: int):
    """Returns (precision, recall, f1); None where undefined."""
    precision = tp / (tp + fp) if tp + fp > 0 else None
    recall = tp / (tp + fn) if tp + fn > 0 else None
    if precision is None or recall is None or precision + recall == 0:
        f1 = None if precision is None or recall is None else 0.0
    else:
        f1 = 2 * precision * recall / (precision + recall)
    return precision, recall, f1


def per_class_f1(counts: ConfusionCounts) -> dict[str, float | None]:
    out = {}
    for c in counts.classes():
        _, _, f1 = _prf(counts.tp.get(c, 0), counts.fp.get(c, 0), counts.fn.get(c, 0))
        out[c] = f1
    return out


def f1_global(counts: ConfusionCounts) -> float | None:
    """Micro F1 over pooled TP/FP/FN of all non-O classes."""
    tp = sum(counts.tp.values())
    fp = sum(counts.fp.values())
    fn = sum(counts.fn.values())
    _, _, f1 = _prf(tp, fp, fn)
    return f1


def f1_macro(per_class) -> float:
    """Unweighted mean; undefined entries count as 0."""
    values = list(per_class.values()) if isinstance(per_class, dict) else list(per_class)
    if not values:
        raise DomainError("f1_macro of an empty class list")
    return sum(v if v is not None else 0.0 for v in values) / len(values)


def f1_weighted(per_class_f1s, supports) -> float:
    f1s = list(per_class_f1s)
    ns = list(supports)
    if len(f1s) != len(ns):
        raise ContractError("f1_weighted: misaligned lists")
    total = sum(ns)
    if total <= 0:
        raise DomainError("f1_weighted: zero total support")
    return sum(n * (f if f is not None else 0.0) for f, n in zip(f1s, ns)) / total


def report(pred_corpus: Corpus, gold_corpus: Corpus) -> tuple[str, str]:
    """Per-class F1 table plus the three aggregates.

    Returns (text_table, csv). 'All classes' is the micro/global F1; class O
    is excluded everywhere (noted in the header).
    """
    counts = count_confusion_corpora(pred_corpus, gold_corpus)
    classes = counts.classes()
    f1s = per_class_f1(counts)
    supports = [counts.support.get(c, 0) for c in classes]
    glob = f1_global(counts)
    macro = f1_macro(f1s) if classes else None
    weighted = (
        f1_weighted([f1s[c] for c in classes], supports) if sum(supports) > 0 else None
    )

    def fmt(v):
        return "undef" if v is None else f"{v:.4f}"

    lines = ["# token-level type F1; class O excluded", f"{'Class':<18}{'F1':>8}{'Support':>10}"]
    csv_lines = ["class,f1,support"]
    for c, n in zip(classes, supports):
        lines.append(f"{c:<18}{fmt(f1s[c]):>8}{n:>10}")
        csv_lines.append(f"{c},{'' if f1s[c] is None else f'{f1s[c]:.6f}'},{n}")
    lines.append(f"{'All classes':<18}{fmt(glob):>8}{sum(supports):>10}")
    lines.append(f"{'Weighted Average':<18}{fmt(weighted):>8}{'':>10}")
    lines.append(f"{'Macro Average':<18}{fmt(macro):>8}{'':>10}")
    undef = [c for c in classes if f1s[c] is None]
    lines.append(f"# classes with undefined F1 treated as 0 in macro: {len(undef)}")
    csv_lines.append(f"__global__,{'' if glob is None else f'{glob:.6f}'},{sum(supports)}")
    csv_lines.append(f"__weighted__,{'' if weighted is None else f'{weighted:.6f}'},")
    csv_lines.append(f"__macro__,{'' if macro is None else f'{macro:.6f}'},")
    return "\n".join(lines) + "\n", "\n".join(csv_lines) + "\n"

from collections import Counter

import pytest

from seqtag import corpus as cp
from seqtag.errors import DomainError, ParseError, VocabularyError


def write(tmp_path, text, name="c.conll"):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return path


def test_load_two_tokens(tmp_path):
    c = cp.load_corpus(write(tmp_path, "The\tO\nUS\tB-geo\n\n"))
    assert len(c) == 1
    assert len(c.sentences[0]) == 2
    assert c.sentences[0].tokens[1].gold_tag == "B-geo"


def test_load_empty_file(tmp_path):
    c = cp.load_corpus(write(tmp_path, ""))
    assert len(c) == 0


def test_load_malformed_row_reports_line(tmp_path):
    with pytest.raises(ParseError, match=":2:"):
        cp.load_corpus(write(tmp_path, "ok\tO\nbroken line\n"))


def test_load_frozen_tagset_rejects_unknown(tmp_path):
    frozen = cp.TagSet(["O", "B-geo"])
    with pytest.raises(VocabularyError):
        cp.load_corpus(write(tmp_path, "x\tB-art\n"), tagset=frozen)


def test_load_csv_sentence(tmp_path):
    text = "sentence_id,surface,tag\n1,The,O\n1,US,B-geo\n2,rain,B-nat\n"
    c = cp.load_corpus(write(tmp_path, text, "c.csv"), fmt="csv-sentence")
    assert len(c) == 2
    assert c.sentences[1].tokens[0].gold_tag == "B-nat"


def test_roundtrip_bit_exact(tmp_path):
    text = "The\tO\nUS\tB-geo\nrain\tB-nat\n\na\tO\n\n"
    p1 = write(tmp_path, text)
    c = cp.load_corpus(p1)
    p2 = tmp_path / "out.conll"
    cp.write_corpus(c, p2)
    assert p2.read_bytes() == p1.read_bytes()
    c2 = cp.load_corpus(p2)
    assert [s.tags() for s in c2.sentences] == [s.tags() for s in c.sentences]


def test_histogram_strips_bio(tmp_path):
    c = cp.load_corpus(write(tmp_path, "a\tO\nb\tB-geo\nc\tI-geo\n\n"))
    assert cp.label_histogram(c) == {"O": 1, "geo": 2}


def test_histogram_total_equals_token_count(tmp_path):
    c = cp.load_corpus(write(tmp_path, "a\tO\nb\tB-art\n\nc\tO\nd\tB-geo\ne\tI-geo\n\n"))
    assert sum(cp.label_histogram(c).values()) == sum(len(s) for s in c.sentences)


def make_corpus(tag_rows):
    sentences = [
        cp.Sentence([cp.Token(f"w{i}", t) for i, t in enumerate(tags)])
        for tags in tag_rows
    ]
    labels = ["O"] + sorted({t for tags in tag_rows for t in tags} - {"O"})
    return cp.Corpus(sentences, cp.TagSet(labels))


def test_mask_keep_strong():
    c = make_corpus([["B-art", "O", "B-geo"]])
    masked = cp.mask_labels(c, "strong")
    assert masked.sentences[0].tags() == ["O", "O", "B-geo"]
    # original untouched
    assert c.sentences[0].tags() == ["B-art", "O", "B-geo"]


def test_mask_keep_weak():
    c = make_corpus([["B-art", "O", "B-geo"]])
    assert cp.mask_labels(c, "weak").sentences[0].tags() == ["B-art", "O", "O"]


def test_mask_idempotent():
    c = make_corpus([["B-art", "O", "B-geo"], ["B-eve", "I-eve", "O"]])
    once = cp.mask_labels(c, "strong")
    twice = cp.mask_labels(once, "strong")
    assert [s.tags() for s in once.sentences] == [s.tags() for s in twice.sentences]


def test_mask_strong_drops_weak_from_histogram():
    c = make_corpus([["B-art", "B-nat", "B-geo", "O"]])
    hist = cp.label_histogram(cp.mask_labels(c, "strong"))
    assert "art" not in hist and "nat" not in hist


def test_detector_labels():
    c = cp.detector_labels(make_corpus([["B-eve", "O"], ["O", "B-geo"]]))
    assert [s.detector_label for s in c.sentences] == [1, 0]


def test_detector_label_iff_weak_mask_nonempty():
    rows = [["B-eve", "O"], ["O", "B-geo"], ["O"], ["I-nat", "B-per"]]
    c = make_corpus(rows)
    labeled = cp.detector_labels(c)
    weak_masked = cp.mask_labels(c, "weak")
    for s, m in zip(labeled.sentences, weak_masked.sentences):
        assert s.detector_label == int(any(t != "O" for t in m.tags()))


def test_balanced_subsample_counts():
    rows = [["B-art"]] * 3 + [["O"]] * 20
    c = cp.detector_labels(make_corpus(rows))
    b = cp.balanced_subsample(c, seed=1)
    labels = Counter(s.detector_label for s in b.sentences)
    assert labels == {0: 3, 1: 3}


def test_balanced_subsample_already_balanced():
    rows = [["B-art"]] * 4 + [["O"]] * 4
    c = cp.detector_labels(make_corpus(rows))
    assert len(cp.balanced_subsample(c, seed=0)) == 8


def test_balanced_subsample_deterministic():
    rows = [["B-art"]] * 2 + [["O", "w"]] * 30
    c = cp.detector_labels(make_corpus(rows))
    a = [s.surfaces() for s in cp.balanced_subsample(c, seed=7).sentences]
    b = [s.surfaces() for s in cp.balanced_subsample(c, seed=7).sentences]
    assert a == b


def test_balanced_subsample_no_positives():
    c = cp.detector_labels(make_corpus([["O"], ["B-geo"]]))
    with pytest.raises(DomainError):
        cp.balanced_subsample(c, seed=0)


def test_build_vocab_min_freq():
    c = cp.Corpus(
        [cp.Sentence([cp.Token("a", "O"), cp.Token("A", "O"), cp.Token("b", "O")])],
        cp.TagSet(["O"]),
    )
    v = cp.build_vocab(c, min_freq=2)
    assert v.tokens == [cp.UNK, cp.PAD, "a"]
    assert v.index("A") == 2  # lowercased lookup
    assert v.index("b") == 0  # below min_freq -> UNK


def test_build_vocab_empty():
    v = cp.build_vocab(cp.Corpus([], cp.TagSet(["O"])), min_freq=1)
    assert v.tokens == [cp.UNK, cp.PAD]


def test_build_vocab_counts_match_recount():
    rows = [["O"] * 4, ["O"] * 3]
    sentences = [
        cp.Sentence([cp.Token(w, "O") for w in words])
        for words in (["x", "y", "x", "z"], ["y", "x", "q"])
    ]
    c = cp.Corpus(sentences, cp.TagSet(["O"]))
    counts = Counter(t.surface.lower() for s in c.sentences for t in s.tokens)
    v = cp.build_vocab(c, min_freq=2)
    for w, n in counts.items():
        assert (w in v) == (n >= 2)


def test_strong_weak_ratio():
    c = make_corpus([["B-geo"] * 5 + ["B-art"]])
    assert cp.strong_weak_ratio(c) == pytest.approx(5.0)

"""Backend equivalence: the numba kernels must agree with the pure-numpy
reference to float64 round-off."""

import numpy as np
import pytest

from seqtag.kernels import numpy_backend as ref

try:
    from seqtag.kernels import numba_backend as fast

    HAVE_NUMBA = True
except ImportError:
    HAVE_NUMBA = False

needs_numba = pytest.mark.skipif(not HAVE_NUMBA, reason="numba unavailable")


def _random_instance(rng, T=6, K=4, d=5, h=3):
    P = rng.normal(size=(T, K))
    A = rng.normal(size=(K + 2, K + 2))
    x = rng.normal(size=(T, d))
    w_ih = rng.normal(size=(4 * h, d)) * 0.5
    w_hh = rng.normal(size=(4 * h, h)) * 0.5
    b = rng.normal(size=4 * h) * 0.1
    return P, A, x, w_ih, w_hh, b


@needs_numba
@pytest.mark.parametrize("seed", range(5))
def test_crf_kernels_agree(seed):
    rng = np.random.default_rng(seed)
    P, A, *_ = _random_instance(rng)
    z1, m1, e1 = ref.crf_forward_backward(P, A)
    z2, m2, e2 = fast.crf_forward_backward(P, A)
    assert z1 == pytest.approx(z2, abs=1e-12)
    np.testing.assert_allclose(m1, m2, atol=1e-12)
    np.testing.assert_allclose(e1, e2, atol=1e-12)
    p1, s1 = ref.viterbi(P, A)
    p2, s2 = fast.viterbi(P, A)
    assert list(p1) == list(p2)
    assert s1 == pytest.approx(s2, abs=1e-12)


@needs_numba
@pytest.mark.parametrize("seed", range(5))
def test_lstm_kernels_agree(seed):
    rng = np.random.default_rng(seed)
    _, _, x, w_ih, w_hh, b = _random_instance(rng)
    h1, c1, g1 = ref.lstm_forward(x, w_ih, w_hh, b)
    h2, c2, g2 = fast.lstm_forward(x, w_ih, w_hh, b)
    np.testing.assert_allclose(h1, h2, atol=1e-13)
    grad_h = rng.normal(size=h1.shape)
    out1 = ref.lstm_backward(x, w_ih, w_hh, h1, c1, g1, grad_h)
    out2 = fast.lstm_backward(x, w_ih, w_hh, h2, c2, g2, grad_h)
    for a, b_ in zip(out1, out2):
        np.testing.assert_allclose(a, b_, atol=1e-12)


def test_lstm_backward_matches_finite_difference():
    rng = np.random.default_rng(7)
    _, _, x, w_ih, w_hh, b = _random_instance(rng, T=4, d=3, h=2)
    weight = rng.normal(size=(4, 2))  # project h_seq to a scalar loss

    def loss(xv, wi, wh, bv):
        h_seq, _, _ = ref.lstm_forward(xv, wi, wh, bv)
        return float((h_seq * weight).sum())

    h_seq, c_seq, gates = ref.lstm_forward(x, w_ih, w_hh, b)
    gx, gwi, gwh, gb = ref.lstm_backward(x, w_ih, w_hh, h_seq, c_seq, gates, weight)
    eps = 1e-6
    for arr, grad in ((x, gx), (w_ih, gwi), (w_hh, gwh), (b, gb)):
        flat = arr.reshape(-1)
        gflat = grad.reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + eps
            hi = loss(x, w_ih, w_hh, b)
            flat[i] = orig - eps
            lo = loss(x, w_ih, w_hh, b)
            flat[i] = orig
            assert gflat[i] == pytest.approx((hi - lo) / (2 * eps), rel=1e-4, abs=1e-7)


def test_viterbi_tie_breaks_low_index():
    # all-zero scores: every path ties; lowest tag index must win everywhere
    P = np.zeros((3, 3))
    A = np.zeros((5, 5))
    path, score = ref.viterbi(P, A)
    assert list(path) == [0, 0, 0]
    assert score == 0.0

"""Pure-numpy reference implementations of the hot sequence kernels.

Shared conventions:
  * LSTM gate order along the 4h axis is [input, forget, cell, output].
  * CRF transition matrix A is (K+2)x(K+2); row/col K is START, K+1 is END.
  * All arrays are float64, time runs left to right (callers reverse for the
    backward LSTM direction).
"""

import numpy as np


def _sigmoid(x):
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def lstm_forward(x, w_ih, w_hh, b):
    """Run an LSTM over x (T x d). Returns (h_seq, c_seq, gates).

    gates holds the post-nonlinearity activations (T x 4h), cached for the
    backward kernel.
    """
    T = x.shape[0]
    h = w_hh.shape[1]
    h_seq = np.zeros((T, h))
    c_seq = np.zeros((T, h))
    gates = np.zeros((T, 4 * h))
    h_prev = np.zeros(h)
    c_prev = np.zeros(h)
    pre_x = x @ w_ih.T + b
    for t in range(T):
        z = pre_x[t] + w_hh @ h_prev
        i = _sigmoid(z[:h])
        f = _sigmoid(z[h : 2 * h])
        g = np.tanh(z[2 * h : 3 * h])
        o = _sigmoid(z[3 * h :])
        c = f * c_prev + i * g
        hh = o * np.tanh(c)
        gates[t, :h] = i
        gates[t, h : 2 * h] = f
        gates[t, 2 * h : 3 * h] = g
        gates[t, 3 * h :] = o
        c_seq[t] = c
        h_seq[t] = hh
        h_prev, c_prev = hh, c
    return h_seq, c_seq, gates


def lstm_backward(x, w_ih, w_hh, h_seq, c_seq, gates, grad_h):
    """Backprop through lstm_forward. Returns (gx, gw_ih, gw_hh, gb)."""
    T, d = x.shape
    h = w_hh.shape[1]
    gx = np.zeros_like(x)
    gw_ih = np.zeros_like(w_ih)
    gw_hh = np.zeros_like(w_hh)
    gb = np.zeros(4 * h)
    dh_next = np.zeros(h)
    dc_next = np.zeros(h)
    for t in range(T - 1, -1, -1):
        i = gates[t, :h]
        f = gates[t, h : 2 * h]
        g = gates[t, 2 * h : 3 * h]
        o = gates[t, 3 * h :]
        c_prev = c_seq[t - 1] if t > 0 else np.zeros(h)
        h_prev = h_seq[t - 1] if t > 0 else np.zeros(h)
        tc = np.tanh(c_seq[t])
        dh = grad_h[t] + dh_next
        do = dh * tc
        dc = dh * o * (1.0 - tc * tc) + dc_next
        di = dc * g
        dg = dc * i
        df = dc * c_prev
        dz = np.concatenate(
            [
                di * i * (1.0 - i),
                df * f * (1.0 - f),
                dg * (1.0 - g * g),
                do * o * (1.0 - o),
            ]
        )
        gb += dz
        gw_ih += np.outer(dz, x[t])
        gw_hh += np.outer(dz, h_prev)
        gx[t] = w_ih.T @ dz
        dh_next = w_hh.T @ dz
        dc_next = dc * f
    return gx, gw_ih, gw_hh, gb


def _lse(v):
    m = v.max()
    return m + np.log(np.exp(v - m).sum())


def crf_forward(P, A):
    """Forward algorithm in log space. Returns (logZ, alpha)."""
    T, K = P.shape
    start, end = K, K + 1
    alpha = np.zeros((T, K))
    alpha[0] = A[start, :K] + P[0]
    for t in range(1, T):
        scores = alpha[t - 1][:, None] + A[:K, :K]
        m = scores.max(axis=0)
        alpha[t] = m + np.log(np.exp(scores - m).sum(axis=0)) + P[t]
    return _lse(alpha[T - 1] + A[:K, end]), alpha


def crf_forward_backward(P, A):
    """Returns (logZ, marginals T x K, expected transition counts (K+2)^2).

    The expected-count matrix is the gradient of logZ w.r.t. A; marginals are
    the gradient w.r.t. P.
    """
    T, K = P.shape
    start, end = K, K + 1
    logZ, alpha = crf_forward(P, A)
    beta = np.zeros((T, K))
    beta[T - 1] = A[:K, end]
    for t in range(T - 2, -1, -1):
        scores = A[:K, :K] + (P[t + 1] + beta[t + 1])[None, :]
        m = scores.max(axis=1)
        beta[t] = m + np.log(np.exp(scores - m[:, None]).sum(axis=1))
    marg = np.exp(alpha + beta - logZ)
    expA = np.zeros_like(A)
    for t in range(T - 1):
        expA[:K, :K] += np.exp(
            alpha[t][:, None] + A[:K, :K] + (P[t + 1] + beta[t + 1])[None, :] - logZ
        )
    expA[start, :K] = marg[0]
    expA[:K, end] = marg[T - 1]
    return logZ, marg, expA


def viterbi(P, A):
    """Max-scoring tag path. Ties break toward the lowest tag index."""
    T, K = P.shape
    start, end = K, K + 1
    delta = A[start, :K] + P[0]
    back = np.zeros((T, K), dtype=np.int64)
    for t in range(1, T):
        scores = delta[:, None] + A[:K, :K]
        back[t] = scores.argmax(axis=0)
        delta = scores.max(axis=0) + P[t]
    final = delta + A[:K, end]
    last = int(final.argmax())
    score = float(final[last])
    path = np.zeros(T, dtype=np.int64)
    path[T - 1] = last
    for t in range(T - 1, 0, -1):
        path[t - 1] = back[t, path[t]]
    return path, score

"""Numba-compiled versions of the hot sequence kernels.

Same contracts as numpy_backend; loops written out so numba can fuse them.
First call per process pays the JIT cost (cache=True amortizes across runs).
"""

import numpy as np
from numba import njit


@njit(cache=True)
def _sigmoid_scalar(x):
    if x >= 0.0:
        return 1.0 / (1.0 + np.exp(-x))
    ex = np.exp(x)
    return ex / (1.0 + ex)


@njit(cache=True)
def lstm_forward(x, w_ih, w_hh, b):
    T = x.shape[0]
    h = w_hh.shape[1]
    h_seq = np.zeros((T, h))
    c_seq = np.zeros((T, h))
    gates = np.zeros((T, 4 * h))
    h_prev = np.zeros(h)
    c_prev = np.zeros(h)
    pre_x = x @ w_ih.T
    for t in range(T):
        z = pre_x[t] + b + w_hh @ h_prev
        for k in range(h):
            i = _sigmoid_scalar(z[k])
            f = _sigmoid_scalar(z[h + k])
            g = np.tanh(z[2 * h + k])
            o = _sigmoid_scalar(z[3 * h + k])
            c = f * c_prev[k] + i * g
            gates[t, k] = i
            gates[t, h + k] = f
            gates[t, 2 * h + k] = g
            gates[t, 3 * h + k] = o
            c_seq[t, k] = c
            h_seq[t, k] = o * np.tanh(c)
        for k in range(h):
            h_prev[k] = h_seq[t, k]
            c_prev[k] = c_seq[t, k]
    return h_seq, c_seq, gates


@njit(cache=True)
def lstm_backward(x, w_ih, w_hh, h_seq, c_seq, gates, grad_h):
    T = x.shape[0]
    d = x.shape[1]
    h = w_hh.shape[1]
    gx = np.zeros((T, d))
    gw_ih = np.zeros(w_ih.shape)
    gw_hh = np.zeros(w_hh.shape)
    gb = np.zeros(4 * h)
    dh_next = np.zeros(h)
    dc_next = np.zeros(h)
    dz = np.zeros(4 * h)
    for t in range(T - 1, -1, -1):
        for k in range(h):
            i = gates[t, k]
            f = gates[t, h + k]
            g = gates[t, 2 * h + k]
            o = gates[t, 3 * h + k]
            c_prev = c_seq[t - 1, k] if t > 0 else 0.0
            tc = np.tanh(c_seq[t, k])
            dh = grad_h[t, k] + dh_next[k]
            do = dh * tc
            dc = dh * o * (1.0 - tc * tc) + dc_next[k]
            dz[k] = dc * g * i * (1.0 - i)
            dz[h + k] = dc * c_prev * f * (1.0 - f)
            dz[2 * h + k] = dc * i * (1.0 - g * g)
            dz[3 * h + k] = do * o * (1.0 - o)
            dc_next[k] = dc * f
        for j in range(4 * h):
            gb[j] += dz[j]
            for k in range(d):
                gw_ih[j, k] += dz[j] * x[t, k]
            if t > 0:
                for k in range(h):
                    gw_hh[j, k] += dz[j] * h_seq[t - 1, k]
        for k in range(d):
            acc = 0.0
            for j in range(4 * h):
                acc += w_ih[j, k] * dz[j]
            gx[t, k] = acc
        for k in range(h):
            acc = 0.0
            for j in range(4 * h):
                acc += w_hh[j, k] * dz[j]
            dh_next[k] = acc
    return gx, gw_ih, gw_hh, gb


@njit(cache=True)
def _lse_vec(v):
    m = v[0]
    for k in range(1, v.shape[0]):
        if v[k] > m:
            m = v[k]
    s = 0.0
    for k in range(v.shape[0]):
        s += np.exp(v[k] - m)
    return m + np.log(s)


@njit(cache=True)
def crf_forward(P, A):
    T, K = P.shape
    start = K
    end = K + 1
    alpha = np.zeros((T, K))
    for j in range(K):
        alpha[0, j] = A[start, j] + P[0, j]
    work = np.zeros(K)
    for t in range(1, T):
        for j in range(K):
            for i in range(K):
                work[i] = alpha[t - 1, i] + A[i, j]
            alpha[t, j] = _lse_vec(work) + P[t, j]
    for j in range(K):
        work[j] = alpha[T - 1, j] + A[j, end]
    return _lse_vec(work), alpha


@njit(cache=True)
def crf_forward_backward(P, A):
    T, K = P.shape
    start = K
    end = K + 1
    logZ, alpha = crf_forward(P, A)
    beta = np.zeros((T, K))
    for j in range(K):
        beta[T - 1, j] = A[j, end]
    work = np.zeros(K)
    for t in range(T - 2, -1, -1):
        for i in range(K):
            for j in range(K):
                work[j] = A[i, j] + P[t + 1, j] + beta[t + 1, j]
            beta[t, i] = _lse_vec(work)
    marg = np.zeros((T, K))
    for t in range(T):
        for j in range(K):
            marg[t, j] = np.exp(alpha[t, j] + beta[t, j] - logZ)
    expA = np.zeros(A.shape)
    for t in range(T - 1):
        for i in range(K):
            for j in range(K):
                expA[i, j] += np.exp(
                    alpha[t, i] + A[i, j] + P[t + 1, j] + beta[t + 1, j] - logZ
                )
    for j in range(K):
        expA[start, j] = marg[0, j]
        expA[j, end] = marg[T - 1, j]
    return logZ, marg, expA


@njit(cache=True)
def viterbi(P, A):
    T, K = P.shape
    start = K
    end = K + 1
    delta = np.zeros(K)
    for j in range(K):
        delta[j] = A[start, j] + P[0, j]
    back = np.zeros((T, K), dtype=np.int64)
    new_delta = np.zeros(K)
    for t in range(1, T):
        for j in range(K):
            best = delta[0] + A[0, j]
            arg = 0
            for i in range(1, K):
                s = delta[i] + A[i, j]
                if s > best:
                    best = s
                    arg = i
            back[t, j] = arg
            new_delta[j] = best + P[t, j]
        for j in range(K):
            delta[j] = new_delta[j]
    last = 0
    score = delta[0] + A[0, end]
    for j in range(1, K):
        s = delta[j] + A[j, end]
        if s > score:
            score = s
            last = j
    path = np.zeros(T, dtype=np.int64)
    path[T - 1] = last
    for t in range(T - 1, 0, -1):
        path[t - 1] = back[t, path[t]]
    return path, score

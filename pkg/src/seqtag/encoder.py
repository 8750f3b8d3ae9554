"""Bi-LSTM encoder producing per-position emission scores.

The full-sequence forward/backward runs in the compiled kernels and is
registered as one fused autodiff node; ``lstm_cell_step`` is the fine-grained
single-step composition, kept as the independent reference path for tests.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from . import kernels
from .autodiff import Tensor
from .errors import DimensionError


@dataclass
class LstmParams:
    """One direction. Gate order along the 4h axis: [input, forget, cell, output]."""

    w_ih: Tensor  # 4h x d
    w_hh: Tensor  # 4h x h
    b: Tensor  # 4h

    @property
    def hidden(self) -> int:
        return self.w_hh.shape[1]

    def tensors(self):
        return [self.w_ih, self.w_hh, self.b]


@dataclass
class EmissionParams:
    w_out: Tensor  # K x 2h
    b_out: Tensor  # K

    def tensors(self):
        return [self.w_out, self.b_out]


def init_lstm(d: int, h: int, rng: np.random.Generator, prefix="lstm") -> LstmParams:
    return LstmParams(
        ad.parameter((4 * h, d), rng, name=f"{prefix}.w_ih"),
        ad.parameter((4 * h, h), rng, name=f"{prefix}.w_hh"),
        Tensor(np.zeros(4 * h), requires_grad=True, name=f"{prefix}.b"),
    )


def init_emission(K: int, h: int, rng: np.random.Generator, prefix="emit") -> EmissionParams:
    return EmissionParams(
        ad.parameter((K, 2 * h), rng, name=f"{prefix}.w_out"),
        Tensor(np.zeros(K), requires_grad=True, name=f"{prefix}.b_out"),
    )


def lstm_cell_step(x: Tensor, h: Tensor, c: Tensor, params: LstmParams):
    """One LSTM step on row vectors x (1,d), h (1,h), c (1,h)."""
    hid = params.hidden
    if x.shape[1] != params.w_ih.shape[1] or h.shape[1] != hid or c.shape[1] != hid:
        raise DimensionError(
            f"lstm_cell_step: x{x.shape} h{h.shape} c{c.shape} vs "
            f"w_ih{params.w_ih.shape} w_hh{params.w_hh.shape}"
        )
    z = x @ ad.transpose(params.w_ih) + h @ ad.transpose(params.w_hh) + params.b
    i = ad.sigmoid(z[:, 0:hid])
    f = ad.sigmoid(z[:, hid : 2 * hid])
    g = ad.tanh(z[:, 2 * hid : 3 * hid])
    o = ad.sigmoid(z[:, 3 * hid :])
    c_new = f * c + i * g
    h_new = o * ad.tanh(c_new)
    return h_new, c_new


def lstm_sequence(x: Tensor, params: LstmParams, reverse: bool = False) -> Tensor:
    """Fused full-sequence LSTM (T,d) -> (T,h); kernel-backed."""
    xd = x.data[::-1].copy() if reverse else x.data
    h_seq, c_seq, gates = kernels.lstm_forward(
        xd, params.w_ih.data, params.w_hh.data, params.b.data
    )
    out_data = h_seq[::-1].copy() if reverse else h_seq

    def _backward(grad_out):
        gh = grad_out[::-1].copy() if reverse else np.ascontiguousarray(grad_out)
        gx, gw_ih, gw_hh, gb = kernels.lstm_backward(
            xd, params.w_ih.data, params.w_hh.data, h_seq, c_seq, gates, gh
        )
        if reverse:
            gx = gx[::-1].copy()
        return gx, gw_ih, gw_hh, gb

    return ad.from_op(out_data, (x, params.w_ih, params.w_hh, params.b), _backward)


def bilstm_encode(x: Tensor, fwd: LstmParams, bwd: LstmParams) -> Tensor:
    """(T,d) -> (T,2h): left-to-right and right-to-left passes, concatenated."""
    return ad.concat(
        [lstm_sequence(x, fwd, reverse=False), lstm_sequence(x, bwd, reverse=True)],
        axis=1,
    )


def emission_scores(hidden: Tensor, params: EmissionParams) -> Tensor:
    """Affine projection (T,2h) -> (T,K); raw scores, no softmax."""
    return hidden @ ad.transpose(params.w_out) + params.b_out

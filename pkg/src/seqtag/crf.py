"""Linear-chain CRF: scoring, exact log-partition, NLL, Viterbi decoding and
posterior marginals. All dynamic programs run in log space.

The transition matrix A is (K+2)x(K+2) with START at index K and END at K+1.
Forbidden transitions (into START, out of END) are pinned at NEG_INF, which is
finite so log-space arithmetic never produces NaN.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from . import kernels
from .autodiff import Tensor
from .errors import DomainError

NEG_INF = -1e4


@dataclass
class CrfParams:
    trans: Tensor  # (K+2) x (K+2)

    @property
    def K(self) -> int:
        return self.trans.shape[0] - 2

    @property
    def start_index(self) -> int:
        return self.K

    @property
    def end_index(self) -> int:
        return self.K + 1

    def tensors(self):
        return [self.trans]

    def sentinel_mask(self) -> np.ndarray:
        """Boolean mask of the cells pinned at NEG_INF."""
        n = self.K + 2
        mask = np.zeros((n, n), dtype=bool)
        mask[:, self.start_index] = True
        mask[self.end_index, :] = True
        return mask

    def apply_sentinel_mask(self):
        """Re-pin forbidden transitions; call after init and every update."""
        self.trans.data[self.sentinel_mask()] = NEG_INF


def init_crf(K: int, rng: np.random.Generator) -> CrfParams:
    params = CrfParams(
        Tensor(rng.uniform(-0.1, 0.1, size=(K + 2, K + 2)), requires_grad=True, name="crf.trans")
    )
    params.apply_sentinel_mask()
    return params


def _check_tags(y, K):
    for tag in y:
        if not 0 <= tag < K:
            raise DomainError(f"tag index {tag} outside [0, {K})")


def sequence_score(P: Tensor, crf: CrfParams, y) -> Tensor:
    """Score of one tag path: transition chain START->y->END plus emissions."""
    y = list(y)
    K = P.shape[1]
    _check_tags(y, K)
    T = P.shape[0]
    if len(y) != T:
        raise DomainError(f"tag sequence length {len(y)} != T={T}")
    from_idx = np.array([crf.start_index] + y)
    to_idx = np.array(y + [crf.end_index])
    trans = ad.tsum(crf.trans[(from_idx, to_idx)])
    emis = ad.tsum(P[(np.arange(T), np.array(y))])
    return trans + emis


def log_partition(P: Tensor, crf: CrfParams) -> Tensor:
    """log Z via the forward algorithm; fused node whose gradient is the
    expected-feature-count matrix from forward-backward."""
    logZ, marg, expA = kernels.crf_forward_backward(P.data, crf.trans.data)

    def _backward(g):
        return g * marg, g * expA

    return ad.from_op(np.float64(logZ), (P, crf.trans), _backward)


def nll(P: Tensor, crf: CrfParams, y) -> Tensor:
    """Negative log-likelihood of the gold path; >= 0."""
    return log_partition(P, crf) - sequence_score(P, crf, y)


def viterbi(P, crf: CrfParams):
    """Best path and its score; ties break toward the lowest tag index."""
    Pd = P.data if isinstance(P, Tensor) else np.asarray(P, dtype=np.float64)
    path, score = kernels.viterbi(Pd, crf.trans.data)
    return [int(t) for t in path], float(score)


def posterior_marginals(P, crf: CrfParams) -> np.ndarray:
    """M[t, j] = p(y_t = j | X); each row sums to 1."""
    Pd = P.data if isinstance(P, Tensor) else np.asarray(P, dtype=np.float64)
    _, marg, _ = kernels.crf_forward_backward(Pd, crf.trans.data)
    return marg

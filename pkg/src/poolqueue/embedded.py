"""Embedded chain of the customer-side system observed just before postings.

The customer-side system is a single channel with Poisson(``lam``) arrivals,
bulk removals of size ``v`` at renewal posting epochs and capacity ``w``.
Observed just before each posting epoch, the occupancy is a Markov chain with
transition kernel driven by the Poisson-mixture ``psi``.

Two stationary vectors are computed here:

* :func:`embedded_P` -- the truncate-and-renormalize solution: the stationary
  vector ``Q`` of the infinite-capacity chain is cut at level ``w - v`` and
  renormalized, leaving exact zeros above ``w - v``.
* :func:`admission_P` -- the stationary vector of the finite chain under
  clipped admission (arrivals blocked at ``w``), whose support is the full
  state range.  This is the law that matches the event-level dynamics and it
  feeds the exact limiting-distribution route.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy import sparse
from scipy.optimize import brentq
from scipy.sparse.linalg import spsolve

from .dist import EXPONENTIAL, PostingDistribution
from .errors import NoRootError, TruncationError

LEVEL_CAP = 1 << 16


@dataclass(frozen=True)
class SystemParams:
    """One platform instance: batch size, capacity, consumption rate, postings."""

    v: int
    w: int
    lam: float
    posting: PostingDistribution

    def __post_init__(self):
        if int(self.v) != self.v or self.v < 1:
            raise ValueError(f"v must be a positive integer, got {self.v}")
        if int(self.w) != self.w or self.w < 1:
            raise ValueError(f"w must be a positive integer, got {self.w}")
        if self.v > self.w:
            raise ValueError(f"batch size v={self.v} must not exceed capacity w={self.w}")
        if not (self.lam > 0):
            raise ValueError(f"lam must be positive, got {self.lam}")

    @property
    def s(self) -> int:
        """Company-reserved slots, ``w - v``."""
        return self.w - self.v

    @property
    def a(self) -> float:
        return self.posting.mean

    @property
    def offered_load(self) -> float:
        """``lam * a / v``; the geometric infinite-queue solution needs < 1."""
        return self.lam * self.posting.mean / self.v


class ModelType(Enum):
    TYPE1 = "type1"  # w >= 2v
    TYPE2 = "type2"  # w < 2v


def model_type(params: SystemParams) -> ModelType:
    return ModelType.TYPE1 if params.w >= 2 * params.v else ModelType.TYPE2


@dataclass(frozen=True)
class EmbeddedSolution:
    """Stationary pre-posting vector of the truncate-and-renormalize route."""

    model_type: ModelType
    P: np.ndarray  # length w + 1, zeros above w - v
    norm_constant: float  # 1 / sum(Q_0 .. Q_{w-v}), >= 1
    root: float | None  # characteristic root, exponential postings only
    truncation_level: int


# -- transition matrices ---------------------------------------------------


def build_tpm(params: SystemParams) -> np.ndarray:
    """Pre-posting transition matrix with tail absorption at column ``w - v``.

    Rows 0..v carry the plain kernel row; for w >= 2v the rows v+1..w-v carry
    the kernel shifted by the leftover occupancy j - v.  In both cases the
    last reachable column w - v absorbs the kernel tail so every row is
    stochastic.  States above w - v are unreachable and get a diagnostic
    self-loop; the stationary vector is never computed from this matrix.
    """
    v, w = params.v, params.w
    s = w - v
    psis, _ = params.posting.psi_row(params.lam, max(s, 0))
    M = np.zeros((w + 1, w + 1))
    for j in range(w + 1):
        if j <= v:
            shift = 0
        elif j <= s:
            shift = j - v
        else:
            M[j, j] = 1.0
            continue
        block = psis[: s - shift]
        M[j, shift : s] = block
        M[j, s] = 1.0 - block.sum()
    return M


def admission_tpm(params: SystemParams) -> np.ndarray:
    """Pre-posting transition matrix of the clipped-admission finite chain.

    From pre-posting state j the batch removes ``min(j, v)`` and arrivals
    then fill up to capacity, so the next state is ``min((j-v)^+ + k, w)``
    with k kernel-distributed; column ``w`` absorbs the tail.
    """
    v, w = params.v, params.w
    psis, _ = params.posting.psi_row(params.lam, w)
    M = np.zeros((w + 1, w + 1))
    for j in range(w + 1):
        d = max(j - v, 0)
        M[j, d:w] = psis[: w - d]
        M[j, w] = 1.0 - M[j, :w].sum()
    return M


def stationary_vector(M: np.ndarray) -> np.ndarray:
    """Left fixed point of a stochastic matrix, normalized to sum 1."""
    n = M.shape[0]
    A = M.T - np.eye(n)
    A[-1, :] = 1.0
    b = np.zeros(n)
    b[-1] = 1.0
    return np.linalg.solve(A, b)


def admission_P(params: SystemParams) -> np.ndarray:
    """Stationary pre-posting law of the clipped-admission chain."""
    return stationary_vector(admission_tpm(params))


# -- infinite-queue solution ----------------------------------------------


def characteristic_root(v: int, lam: float, a: float) -> float:
    """Unique real root > 1 of ``(1 + lam a) z^v - lam a z^{v+1} - 1``.

    Exists exactly when the offered load ``lam a / v`` is below 1.
    """
    la = lam * a
    if la / v >= 1.0:
        raise NoRootError(
            f"offered load lam*a/v = {la / v:.6g} >= 1; no root beyond 1 exists"
        )

    def f(z):
        return z**v * (1.0 + la * (1.0 - z)) - 1.0

    hi = 2.0
    while f(hi) > 0:
        hi *= 2.0
        if hi > 1e12:  # pragma: no cover - defensive
            raise NoRootError("failed to bracket the characteristic root")
    z0 = brentq(f, 1.0 + 1e-12, hi, xtol=1e-15, rtol=8.9e-16)
    # Newton polish to push the residual to rounding level
    for _ in range(3):
        fz = f(z0)
        dfz = v * z0 ** (v - 1) * (1.0 + la * (1.0 - z0)) - la * z0**v
        if dfz == 0:
            break
        step = fz / dfz
        if z0 - step <= 1.0:
            break
        z0 -= step
    return z0


def _truncated_infinite_Q(params: SystemParams, eps: float) -> np.ndarray:
    """Stationary vector of the level-truncated infinite chain.

    The level-N matrix absorbs each row's tail in its last column; N is
    doubled until both the absorbed tail mass and the change in the head
    entries 0..w-v drop below ``eps``.
    """
    v, w, lam = params.v, params.w, params.lam
    head = w - v + 1
    n = max(64, 4 * (w + 1))
    prev_head = None
    while n <= LEVEL_CAP:
        psis, _ = params.posting.psi_row(lam, n - 1)
        # kernel entries below rounding never influence eps-level results
        nz = np.nonzero(psis > 1e-18)[0]
        band = int(nz[-1]) + 1 if nz.size else 1
        band = max(band, head)
        rows, cols, vals = [], [], []
        for j in range(n):
            d = max(j - v, 0)
            hi = min(d + band, n - 1)
            block = psis[: hi - d]
            rows.extend([j] * (hi - d))
            cols.extend(range(d, hi))
            vals.extend(block)
            rows.append(j)
            cols.append(n - 1)
            vals.append(1.0 - float(block.sum()))
        M = sparse.csr_matrix((vals, (rows, cols)), shape=(n, n))
        A = (M.T - sparse.eye(n)).tolil()
        A[n - 1, :] = 1.0
        b = np.zeros(n)
        b[n - 1] = 1.0
        Q = spsolve(A.tocsr(), b)
        tail = abs(Q[n - 1]) + max(0.0, 1.0 - float(Q[: n - 1].sum()))
        if prev_head is not None and tail < eps:
            if np.max(np.abs(Q[:head] - prev_head)) < eps:
                return Q
        prev_head = Q[:head].copy()
        n *= 2
    raise TruncationError(
        f"truncated solve did not converge below eps={eps} at level cap {LEVEL_CAP}"
    )


def infinite_queue_Q(
    params: SystemParams, eps: float = 1e-12, method: str = "auto"
) -> np.ndarray:
    """Head of the infinite-capacity stationary vector ``Q``.

    Exponential postings use the geometric closed form driven by the
    characteristic root; other kinds (or ``method="solve"``) use the
    truncated linear solve.  Requires offered load < 1.
    """
    if method not in ("auto", "geometric", "solve"):
        raise ValueError(f"unknown method {method!r}")
    if params.offered_load >= 1.0:
        raise NoRootError(
            f"offered load {params.offered_load:.6g} >= 1; "
            "the infinite-queue stationary vector does not exist"
        )
    kind = params.posting.kind
    if method == "geometric" and kind != EXPONENTIAL:
        raise ValueError("geometric closed form applies to exponential postings only")
    if kind == EXPONENTIAL and method != "solve":
        z0 = characteristic_root(params.v, params.lam, params.a)
        r = 1.0 / z0
        n = max(params.w - params.v + 1, int(np.ceil(np.log(eps) / np.log(r))) + 1)
        return (1.0 - r) * r ** np.arange(n)
    return _truncated_infinite_Q(params, eps)


def embedded_P(params: SystemParams, eps: float = 1e-12) -> EmbeddedSolution:
    """Truncate-and-renormalize stationary vector on states 0..w-v."""
    Q = infinite_queue_Q(params, eps)
    head = Q[: params.w - params.v + 1]
    kappa = 1.0 / float(head.sum())
    P = np.zeros(params.w + 1)
    P[: head.size] = kappa * head
    root = None
    if params.posting.kind == EXPONENTIAL:
        root = characteristic_root(params.v, params.lam, params.a)
    return EmbeddedSolution(
        model_type=model_type(params),
        P=P,
        norm_constant=kappa,
        root=root,
        truncation_level=Q.size,
    )


def tpm_stationary_delta(params: SystemParams, eps: float = 1e-12) -> float:
    """Max-abs gap between the truncate-and-renormalize vector and the
    stationary vector of :func:`build_tpm` on its reachable block.

    The two need not coincide; the gap is reported as a diagnostic rather
    than asserted away.
    """
    sol = embedded_P(params, eps)
    head = params.w - params.v + 1
    block = build_tpm(params)[:head, :head]
    direct = stationary_vector(block)
    return float(np.max(np.abs(direct - sol.P[:head])))

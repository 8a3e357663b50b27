"""Continuous-time stationary occupancy distributions for both viewpoints.

``pi`` is the stationary law of the customer-side occupancy and ``pi1`` the
contractor-pool law; the two are mirror images (state k on one side is state
w - k on the other), so ``pi1`` is always the exact reversal of ``pi``.

Two computation routes are provided:

* ``renewal`` (default) -- the key-renewal route: the pre-posting law of the
  clipped-admission chain is propagated through the expected within-interval
  occupancy kernel.  This is exact for the clipped-admission dynamics, for
  every posting distribution and every load, and is the route validated
  against the closed-form birth-death reduction and the simulator.
* ``ladder`` -- the closed-form increment bands ``G_n`` applied to the
  truncate-and-renormalize embedded vector, with the stationary law assembled
  as ``pi_n = G_n + pi_0`` and ``pi_0`` fixed by normalization.  The bands
  are evaluated exactly as published (empty index ranges contribute zero);
  negative entries are flagged, never clamped.  Kept for diagnostics and
  differential reporting; it is known to deviate from the event-level
  dynamics, and the comparison tooling quantifies the gap.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .embedded import EmbeddedSolution, ModelType, SystemParams, admission_P, model_type

NEGATIVE_TOL = 1e-9

RENEWAL = "renewal"
LADDER = "ladder"


@dataclass(frozen=True)
class LimitingDistribution:
    pi: np.ndarray  # customer-side stationary law, length w + 1
    pi1: np.ndarray  # contractor-pool stationary law, exact reversal of pi
    g_vector: np.ndarray | None  # ladder increments G_1..G_w, diagnostics
    valid: bool
    negative_states: tuple[int, ...]
    method: str

    def expected_pool(self) -> float:
        return float(np.arange(self.pi1.size) @ self.pi1)


def bhat(P: np.ndarray, a: float, l: int) -> float:
    """Partial boundary-flow sum ``(1/a) * (P_1 + ... + P_l)``; zero at l=0."""
    if l < 0 or l >= P.size:
        raise ValueError(f"l must lie in 0..{P.size - 1}, got {l}")
    return float(P[1 : l + 1].sum()) / a


def g_vector(params: SystemParams, P: np.ndarray) -> np.ndarray:
    """Ladder increments ``G_1..G_w`` (three bands per model type).

    Index ranges are taken literally; a band whose summation range is empty
    or reversed contributes zero from that sum.
    """
    v, w, lam, a = params.v, params.w, params.lam, params.a
    G = np.zeros(w)

    def bh(l):
        return bhat(P, a, max(l, 0))

    if model_type(params) is ModelType.TYPE1:
        for n in range(1, w + 1):
            if n <= v:
                acc = P[v : v + n].sum() / a - bh(n)
            elif n <= w - v:
                acc = P[2 * v + 1 : n + 1].sum() / a - bh(v - 1)
            else:
                acc = (n - w + v) * P[w] / a - bh(v - 1)
            G[n - 1] = acc / lam
    else:
        for n in range(1, w + 1):
            if n <= w - v:
                acc = P[v : v + n].sum() / a - bh(n)
            elif n <= v:
                acc = (P[v + 1 : w + 1].sum() + (n - w + v) * P[w]) / a - bh(n)
            else:
                acc = (P[n + 1 : w + 1].sum() + (n - w + v) * P[w]) / a - bh(v - 1)
            G[n - 1] = acc / lam
    return G


def interval_occupancy(params: SystemParams) -> np.ndarray:
    """Matrix of expected occupancy fractions over one posting interval.

    Entry (j, k) is the expected fraction of an interval spent at occupancy k
    when the interval opens at ``(j - v)^+`` customers; arrivals beyond
    capacity are blocked, so the top state absorbs the remainder of each row.
    Rows are stochastic, which makes the resulting ``pi`` sum to one by
    construction.
    """
    v, w, lam = params.v, params.w, params.lam
    la = lam * params.a
    psis, _ = params.posting.psi_row(lam, w)
    # expected fraction of the interval with exactly m arrivals so far
    gamma = (1.0 - np.cumsum(psis)) / la
    C = np.zeros((w + 1, w + 1))
    for j in range(w + 1):
        d = max(j - v, 0)
        C[j, d:w] = gamma[: w - d]
        C[j, w] = 1.0 - C[j, :w].sum()
    return C


def limiting_pi(
    params: SystemParams,
    embedded: EmbeddedSolution | None = None,
    method: str = RENEWAL,
) -> LimitingDistribution:
    """Stationary occupancy laws for one platform instance.

    ``embedded`` feeds the ladder route and the diagnostic ``g_vector``; it
    is required for ``method="ladder"`` and optional otherwise (the renewal
    route solves the clipped-admission chain internally and works at any
    load).
    """
    if method not in (RENEWAL, LADDER):
        raise ValueError(f"unknown method {method!r}")
    w = params.w

    gvec = g_vector(params, embedded.P) if embedded is not None else None

    if method == LADDER:
        if embedded is None:
            raise ValueError("the ladder route requires an embedded solution")
        pi0 = (1.0 - gvec.sum()) / (1.0 + w)
        pi = np.empty(w + 1)
        pi[0] = pi0
        pi[1:] = gvec + pi0
    else:
        pre = admission_P(params)
        pi = pre @ interval_occupancy(params)

    negatives = tuple(int(k) for k in np.nonzero(pi < -NEGATIVE_TOL)[0])
    return LimitingDistribution(
        pi=pi,
        pi1=pi[::-1].copy(),
        g_vector=gvec,
        valid=not negatives,
        negative_states=negatives,
        method=method,
    )

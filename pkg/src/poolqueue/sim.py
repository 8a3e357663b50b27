"""Seeded discrete-event simulation of the contractor pool.

The pool holds 0..w contractors.  Batches of v are posted at renewal epochs
drawn from the posting distribution; customers arrive in a Poisson stream
with rate lam and each consumes one contractor, or is lost when the pool is
empty.  Two admission rules for a posted batch are supported:

* ``clip`` -- admit as many of the v contractors as capacity allows;
* ``reject`` -- admit the batch only when all v fit, otherwise drop it.

Randomness comes from two numpy PCG64 generators (arrival and posting
streams) spawned from a single ``SeedSequence``, so a run is a pure function
of its configuration: identical configurations give bit-identical results,
and the two streams are shared between policies for exact coupling.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .cost import CostParams, ObjectiveBreakdown
from .embedded import EmbeddedSolution, SystemParams
from .limiting import LimitingDistribution

CLIP = "clip"
REJECT = "reject"

_BLOCK = 1 << 16


@dataclass(frozen=True)
class SimConfig:
    seed: int
    num_postings: int
    warmup_fraction: float = 0.1
    policy: str = CLIP

    def __post_init__(self):
        if self.num_postings < 1:
            raise ValueError("num_postings must be >= 1")
        if not (0.0 <= self.warmup_fraction < 1.0):
            raise ValueError("warmup_fraction must lie in [0, 1)")
        if self.policy not in (CLIP, REJECT):
            raise ValueError(f"policy must be {CLIP!r} or {REJECT!r}, got {self.policy!r}")


@dataclass(frozen=True)
class SimResult:
    time_avg_dist: np.ndarray  # post-warmup fraction of time at each pool level
    embedded_dist: np.ndarray  # pool level just before each counted posting
    lost_customer_rate: float
    avg_cost_rate: float
    total_sim_time: float
    recorded_time: float  # sum of per-state sojourn times; conservation check
    seed: int
    postings_counted: int


class _Stream:
    """Sequential draws from a generator, refilled in fixed-size blocks."""

    def __init__(self, draw):
        self._draw = draw
        self._buf = draw(_BLOCK)
        self._i = 0

    def next(self) -> float:
        if self._i >= self._buf.size:
            self._buf = self._draw(_BLOCK)
            self._i = 0
        value = self._buf[self._i]
        self._i += 1
        return value


def run_sim(params: SystemParams, cost: CostParams, config: SimConfig) -> SimResult:
    """Run one seeded simulation and collect post-warmup statistics."""
    v, w, lam = params.v, params.w, params.lam
    arrival_seed, posting_seed = np.random.SeedSequence(config.seed).spawn(2)
    arr_rng = np.random.default_rng(arrival_seed)
    post_rng = np.random.default_rng(posting_seed)
    arrivals = _Stream(lambda n: arr_rng.exponential(1.0 / lam, n))
    postings = _Stream(lambda n: np.asarray(params.posting.sample(post_rng, n), dtype=float))
    clip = config.policy == CLIP

    warmup = int(config.warmup_fraction * config.num_postings)
    occupancy = np.zeros(w + 1)
    embedded = np.zeros(w + 1)
    lost = 0
    z = 0
    t = 0.0
    t_arr = arrivals.next()
    t_post = postings.next()
    collecting = False
    t_start = 0.0
    posts_done = 0
    counted = 0

    while posts_done < config.num_postings:
        if t_arr < t_post:
            if collecting:
                occupancy[z] += t_arr - t
            t = t_arr
            if z > 0:
                z -= 1
            elif collecting:
                lost += 1
            t_arr = t + arrivals.next()
        else:
            if collecting:
                occupancy[z] += t_post - t
            t = t_post
            posts_done += 1
            if posts_done > warmup:
                if not collecting:
                    collecting = True
                    t_start = t
                embedded[z] += 1
                counted += 1
            if clip:
                z = min(z + v, w)
            elif z <= w - v:
                z += v
            t_post = t + postings.next()

    total_time = t - t_start
    time_avg = occupancy / occupancy.sum()
    embedded_dist = embedded / embedded.sum()
    ks = np.arange(w + 1)
    holding_rates = (
        np.asarray(cost.holding_table, dtype=float)
        if cost.holding_table is not None
        else cost.c_h * ks
    )
    reserve_rates = (
        np.where(
            ks > v,
            np.asarray(cost.reserve_table, dtype=float)[np.clip(ks - v, 0, None)],
            0.0,
        )
        if cost.reserve_table is not None
        else cost.c_r * np.clip(ks - v, 0, None)
    )
    state_cost = float((holding_rates + reserve_rates) @ occupancy)
    avg_cost_rate = (state_cost + cost.c_d * (lam / v) * counted) / total_time
    return SimResult(
        time_avg_dist=time_avg,
        embedded_dist=embedded_dist,
        lost_customer_rate=lost / total_time,
        avg_cost_rate=avg_cost_rate,
        total_sim_time=total_time,
        recorded_time=float(occupancy.sum()),
        seed=config.seed,
        postings_counted=counted,
    )


@dataclass(frozen=True)
class ComparisonReport:
    tv_time_avg: float
    max_abs_delta: float
    tv_embedded: float | None
    cost_rate_rel_error: float
    tol_tv: float
    tol_cost: float
    passed: bool


def total_variation(p: np.ndarray, q: np.ndarray) -> float:
    if p.shape != q.shape:
        raise ValueError(f"distribution shapes differ: {p.shape} vs {q.shape}")
    return 0.5 * float(np.abs(p - q).sum())


def compare(
    dist: LimitingDistribution,
    breakdown: ObjectiveBreakdown,
    sim_result: SimResult,
    embedded: EmbeddedSolution | None = None,
    tol_tv: float = 0.01,
    tol_cost: float = 0.05,
) -> ComparisonReport:
    """Differential report between the analytic pipeline and one sim run.

    The embedded comparison mirrors the analytic pre-posting vector onto the
    pool side before measuring distance; it is skipped when no embedded
    solution is available (offered load >= 1).
    """
    pi1 = dist.pi1
    sim_pool = sim_result.time_avg_dist
    tv = total_variation(pi1, sim_pool)
    max_abs = float(np.max(np.abs(pi1 - sim_pool)))
    tv_emb = None
    if embedded is not None:
        tv_emb = total_variation(embedded.P[::-1], sim_result.embedded_dist)
    denom = abs(breakdown.total)
    rel = abs(breakdown.total - sim_result.avg_cost_rate) / denom if denom > 0 else 0.0
    return ComparisonReport(
        tv_time_avg=tv,
        max_abs_delta=max_abs,
        tv_embedded=tv_emb,
        cost_rate_rel_error=rel,
        tol_tv=tol_tv,
        tol_cost=tol_cost,
        passed=tv < tol_tv and rel < tol_cost,
    )

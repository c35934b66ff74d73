"""Seeded Monte-Carlo estimates of MAP success probabilities.

Sample ``i`` of a run always uses the same noise and scenario draw, keyed by
``(seed, i)``. Chunk size and worker count change only speed, never results.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.special import logsumexp, ndtri

from . import rng
from .detection import HalfspaceSystem, _as_prior, _stack, _vec, halfspace_system, map_scores
from .errors import DimensionMismatch, DuplicateMean, EmptyCollection, EmptyScenarioSet, InputError
from .noise import NoiseModel


@dataclass(frozen=True)
class McConfig:
    samples: int
    seed: int = 0
    confidence_level: float = 0.95
    chunk_size: int = 1 << 16
    workers: int = 1

    def __post_init__(self):
        if int(self.samples) != self.samples or self.samples < 1:
            raise InputError(f"samples must be a positive integer, got {self.samples!r}")
        if not 0 <= int(self.seed) < 2 ** 64:
            raise InputError("seed must be an unsigned 64-bit integer")
        if not 0 < self.confidence_level < 1:
            raise InputError("confidence_level must lie in (0, 1)")
        if self.chunk_size < 1 or self.workers < 1:
            raise InputError("chunk_size and workers must be positive")


@dataclass(frozen=True)
class McEstimate:
    value: float
    std_error: float
    ci_low: float
    ci_high: float
    samples_used: int

    @classmethod
    def from_counts(cls, successes: int, n: int, confidence_level: float = 0.95) -> McEstimate:
        """Binomial proportion with a normal-approximation interval clipped to [0, 1]."""
        p = successes / n
        se = math.sqrt(p * (1 - p) / n)
        z = float(ndtri(0.5 + confidence_level / 2))
        return cls(p, se, max(0.0, p - z * se), min(1.0, p + z * se), n)

    def covers(self, value: float) -> bool:
        return self.ci_low <= value <= self.ci_high


@dataclass(frozen=True)
class NwayEstimate:
    overall: McEstimate
    conditional: tuple[McEstimate | None, ...]


def _chunks(mc: McConfig):
    for start in range(0, mc.samples, mc.chunk_size):
        yield start, min(mc.chunk_size, mc.samples - start)


def _tally(mc: McConfig, work: Callable[[int, int], np.ndarray]) -> np.ndarray:
    """Sum ``work(start, count)`` over all chunks. Integer tallies make the merge order-free."""
    chunks = list(_chunks(mc))
    if mc.workers == 1 or len(chunks) == 1:
        parts = [work(s, c) for s, c in chunks]
    else:
        with ThreadPoolExecutor(max_workers=mc.workers) as pool:
            parts = list(pool.map(lambda sc: work(*sc), chunks))
    return np.sum(parts, axis=0)


def _noise_rows(noise: NoiseModel, seed: int, start: int, count: int, dim: int) -> np.ndarray:
    z = rng.normal_block(seed, rng.STREAM_NOISE, start, count, dim)
    return noise.colour(z)


def _scenario_draws(prior, seed: int, start: int, count: int) -> np.ndarray:
    cdf = np.cumsum(prior.weights)
    cdf[-1] = 1.0
    u = rng.uniform_block(seed, rng.STREAM_SCENARIO, start, count, 1)[:, 0]
    return np.minimum(np.searchsorted(cdf, u, side="right"), len(cdf) - 1)


def sample_gaussian(mean, noise: NoiseModel, index: int, seed: int) -> np.ndarray:
    """Draw ``mean + L z`` where ``z`` is the standard-normal vector keyed by ``(seed, index)``."""
    mu = _vec(mean)
    noise.check_dim(mu.shape[0])
    return mu + _noise_rows(noise, seed, index, 1, mu.shape[0])[0]


def orthant_probability(A, b, mean, noise: NoiseModel, mc: McConfig) -> McEstimate:
    """Estimate ``P(A y + b > 0 componentwise)`` for ``y ~ N(mean, Sigma)``.

    Boundary hits count as failures.
    """
    A = np.atleast_2d(np.asarray(A, dtype=float))
    b = np.atleast_1d(np.asarray(b, dtype=float))
    mu = _vec(mean)
    if A.shape[1] != mu.shape[0] or A.shape[0] != b.shape[0]:
        raise DimensionMismatch(f"A is {A.shape}, b has {b.shape[0]} rows, mean has {mu.shape[0]}")
    noise.check_dim(mu.shape[0])
    shift = A @ mu + b

    def work(start, count):
        w = _noise_rows(noise, mc.seed, start, count, mu.shape[0])
        return np.count_nonzero(np.all(w @ A.T + shift > 0, axis=1))

    return McEstimate.from_counts(int(_tally(mc, work)), mc.samples, mc.confidence_level)


def conditional_success_via_orthant(means: Sequence, reference: int, noise: NoiseModel,
                                    mc: McConfig) -> McEstimate:
    """``P(MAP picks reference | reference)`` under a uniform prior, as an orthant probability."""
    system: HalfspaceSystem = halfspace_system(means, reference, noise)
    return orthant_probability(system.A, system.b, means[reference], noise, mc)


def _check_distinct(M: np.ndarray) -> None:
    for i in range(M.shape[0]):
        for j in range(i + 1, M.shape[0]):
            if np.array_equal(M[i], M[j]):
                raise DuplicateMean(f"scenarios {i} and {j} share a mean")


def nway_success_probability(means: Sequence, prior, noise: NoiseModel, mc: McConfig) -> NwayEstimate:
    """Prior-weighted MAP success over ``N`` scenarios plus each conditional success rate."""
    M = _stack(means, noise)
    n = M.shape[0]
    if n < 2:
        raise EmptyScenarioSet("need at least two scenarios")
    _check_distinct(M)
    prior = _as_prior(prior, n)

    def work(start, count):
        truth = _scenario_draws(prior, mc.seed, start, count)
        Y = M[truth] + _noise_rows(noise, mc.seed, start, count, M.shape[1])
        hit = np.argmax(map_scores(Y, M, prior, noise), axis=1) == truth
        return np.stack([np.bincount(truth, minlength=n),
                         np.bincount(truth[hit], minlength=n)])

    counts, hits = _tally(mc, work)
    overall = McEstimate.from_counts(int(hits.sum()), mc.samples, mc.confidence_level)
    conditional = tuple(
        McEstimate.from_counts(int(h), int(c), mc.confidence_level) if c else None
        for c, h in zip(counts, hits))
    return NwayEstimate(overall, conditional)


def collection_success_probability(V0: Sequence, V1: Sequence, prior, noise: NoiseModel,
                                   mc: McConfig) -> McEstimate:
    """Success of the Bayes rule that picks the collection with more posterior mass.

    ``prior`` covers the members of ``V0`` followed by those of ``V1``. The
    posterior mass of a collection is the log-sum-exp of its members' scores.
    Equal masses resolve to ``V0``.
    """
    if len(V0) == 0 or len(V1) == 0:
        raise EmptyCollection("both collections need at least one member")
    M = _stack(list(V0) + list(V1), noise)
    n0 = len(V0)
    prior = _as_prior(prior, M.shape[0])

    def work(start, count):
        truth = _scenario_draws(prior, mc.seed, start, count)
        Y = M[truth] + _noise_rows(noise, mc.seed, start, count, M.shape[1])
        s = map_scores(Y, M, prior, noise)
        pick1 = logsumexp(s[:, n0:], axis=1) > logsumexp(s[:, :n0], axis=1)
        return np.count_nonzero(pick1 == (truth >= n0))

    return McEstimate.from_counts(int(_tally(mc, work)), mc.samples, mc.confidence_level)


def evaluate_estimator(decision: Callable, means: Sequence, prior, noise: NoiseModel,
                       mc: McConfig, batched: bool = False) -> McEstimate:
    """Empirical success rate of an arbitrary decision rule under the Gaussian scenario model.

    ``decision`` maps one observation to a scenario index, or with
    ``batched=True`` maps an ``(n, T)`` array to ``n`` indices.
    """
    M = _stack(means, noise)
    prior = _as_prior(prior, M.shape[0])

    def work(start, count):
        truth = _scenario_draws(prior, mc.seed, start, count)
        Y = M[truth] + _noise_rows(noise, mc.seed, start, count, M.shape[1])
        if batched:
            guess = np.asarray(decision(Y)).reshape(-1)
        else:
            guess = np.array([decision(y) for y in Y])
        return np.count_nonzero(guess == truth)

    return McEstimate.from_counts(int(_tally(mc, work)), mc.samples, mc.confidence_level)


def map_decision(means: Sequence, prior, noise: NoiseModel) -> Callable[[np.ndarray], np.ndarray]:
    """Batched MAP rule, suitable for :func:`evaluate_estimator` with ``batched=True``."""
    M = _stack(means, noise)
    prior = _as_prior(prior, M.shape[0])
    return lambda Y: np.argmax(map_scores(Y, M, prior, noise), axis=1)

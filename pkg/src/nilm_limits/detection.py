"""Closed-form Gaussian detection between scenario means.

All scenarios share one noise covariance, so every pairwise MAP boundary is a
hyperplane. Success probabilities follow from the Gaussian law of the signed
distance to that hyperplane.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.special import erf, ndtr, ndtri

from .errors import (
    DegenerateHypotheses,
    DimensionMismatch,
    DuplicateMean,
    EmptyScenarioSet,
    InputError,
    InvalidPrior,
    ZeroNormal,
    ZeroPrior,
)
from .noise import NoiseModel
from .rng import uniform_stream
from .signals import ScenarioMean

PRIOR_ATOL = 1e-12
# largest matrix dimension handled by a dense SVD before switching to power iteration
DENSE_SVD_LIMIT = 512


def _vec(m) -> np.ndarray:
    if isinstance(m, ScenarioMean):
        return m.mean
    arr = np.asarray(m, dtype=float)
    if arr.ndim == 0:
        arr = arr.reshape(1)
    return arr


def _stack(means, noise: NoiseModel | None = None) -> np.ndarray:
    if len(means) == 0:
        raise EmptyScenarioSet("no scenarios given")
    vecs = [_vec(m) for m in means]
    dims = {v.shape[0] for v in vecs}
    if len(dims) != 1:
        raise DimensionMismatch(f"scenario means have differing lengths {sorted(dims)}")
    M = np.vstack(vecs)
    if noise is not None:
        noise.check_dim(M.shape[1])
    return M


@dataclass(frozen=True, eq=False)
class DiscretePrior:
    weights: np.ndarray

    def __post_init__(self):
        w = np.array(self.weights, dtype=float).reshape(-1)
        if w.size == 0:
            raise EmptyScenarioSet("prior has no entries")
        if np.any(~np.isfinite(w)) or np.any(w < 0):
            raise InvalidPrior(f"prior weights must be finite and nonnegative: {w}")
        if abs(w.sum() - 1.0) > PRIOR_ATOL:
            raise InvalidPrior(f"prior weights sum to {w.sum()!r}, not 1")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    @classmethod
    def uniform(cls, n: int) -> DiscretePrior:
        return cls(np.full(n, 1.0 / n))

    @classmethod
    def normalized(cls, weights) -> DiscretePrior:
        w = np.asarray(weights, dtype=float)
        total = w.sum()
        if not total > 0:
            raise InvalidPrior("prior weights sum to zero")
        return cls(w / total)

    def __len__(self) -> int:
        return self.weights.shape[0]

    def log_weights(self) -> np.ndarray:
        with np.errstate(divide="ignore"):
            return np.log(self.weights)


def _as_prior(prior, n: int) -> DiscretePrior:
    if prior is None:
        return DiscretePrior.uniform(n)
    if not isinstance(prior, DiscretePrior):
        prior = DiscretePrior(prior)
    if len(prior) != n:
        raise DimensionMismatch(f"prior has {len(prior)} entries for {n} scenarios")
    return prior


def normal_cdf(x):
    return ndtr(x)


def normal_quantile(p):
    return ndtri(p)


def log_likelihood_ratio(y, mean0, mean1, noise: NoiseModel) -> float:
    """``ln f1(y) - ln f0(y)`` for Gaussians sharing the covariance of ``noise``."""
    y, m0, m1 = _vec(y), _vec(mean0), _vec(mean1)
    if not (y.shape == m0.shape == m1.shape):
        raise DimensionMismatch(f"shapes {y.shape}, {m0.shape}, {m1.shape} disagree")
    r0 = noise.mahalanobis_sq(y - m0)
    r1 = noise.mahalanobis_sq(y - m1)
    return float(0.5 * (r0 - r1))


def map_scores(Y, means, prior, noise: NoiseModel) -> np.ndarray:
    """Log posteriors up to a per-row constant, shape ``(n_obs, n_scenarios)``."""
    M = _stack(means, noise)
    prior = _as_prior(prior, M.shape[0])
    Y = np.atleast_2d(np.asarray(Y, dtype=float))
    if Y.shape[1] != M.shape[1]:
        raise DimensionMismatch(f"observation length {Y.shape[1]} != mean length {M.shape[1]}")
    # centring keeps the expanded quadratic form well conditioned
    centre = M.mean(axis=0)
    Wy = noise.whiten(Y - centre)
    Wm = noise.whiten(M - centre)
    # ||Wy - Wm||^2 without the ||Wy||^2 term, which is common to every scenario
    return prior.log_weights()[None, :] + Wy @ Wm.T - 0.5 * np.sum(Wm * Wm, axis=1)[None, :]


def map_classify_batch(Y, means, prior, noise: NoiseModel) -> np.ndarray:
    """Row-wise MAP decisions; ``np.argmax`` breaks ties toward the lowest index."""
    return np.argmax(map_scores(Y, means, prior, noise), axis=1)


def map_classify(y, means: Sequence, prior, noise: NoiseModel) -> int:
    """MAP scenario index for one observation (MLE when ``prior`` is uniform)."""
    if len(means) < 2:
        raise EmptyScenarioSet("MAP classification needs at least two scenarios")
    y = _vec(y)
    return int(map_classify_batch(y[None, :], means, prior, noise)[0])


@dataclass(frozen=True, eq=False)
class Hyperplane:
    """MAP boundary between two scenarios: decide scenario 1 iff ``a @ y + b <= 0``."""

    a: np.ndarray
    b: float
    includes_prior_offset: bool = False

    def decide(self, Y) -> np.ndarray:
        """1 where scenario 1 is chosen, else 0."""
        return (np.asarray(Y, dtype=float) @ self.a + self.b <= 0).astype(int)

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.a))


def _pair(mean0, mean1, noise):
    m0, m1 = _vec(mean0), _vec(mean1)
    if m0.shape != m1.shape:
        raise DimensionMismatch(f"mean lengths {m0.shape[0]} and {m1.shape[0]} differ")
    noise.check_dim(m0.shape[0])
    return m0, m1


def decision_hyperplane(mean0, mean1, noise: NoiseModel, prior=None) -> Hyperplane:
    m0, m1 = _pair(mean0, mean1, noise)
    if np.array_equal(m0, m1):
        raise DegenerateHypotheses("identical means have no separating hyperplane")
    prior = _as_prior(prior, 2)
    p0, p1 = prior.weights
    if p0 == 0 or p1 == 0:
        raise ZeroPrior("both scenarios need positive prior mass")
    a = noise.solve(m0 - m1)
    # -(1/2)(m0-m1)^T S^-1 (m0+m1) == (1/2)(m1^T S^-1 m1 - m0^T S^-1 m0) without the cancellation
    b = -0.5 * float(a @ (m0 + m1))
    offset = not bool(p0 == p1)
    if offset:
        b += math.log(p0 / p1)
    if not np.any(a):
        raise DegenerateHypotheses("means are numerically indistinguishable")
    return Hyperplane(a, b, offset)


@dataclass(frozen=True)
class ProjectionStats:
    mean: float
    variance: float


def projection_stats(h: Hyperplane, mean, noise: NoiseModel) -> ProjectionStats:
    """Mean and variance of the signed distance ``(a @ y + b) / |a|`` for ``y ~ N(mean, Sigma)``."""
    norm = h.norm
    if norm == 0:
        raise ZeroNormal("hyperplane normal is zero")
    mu = _vec(mean)
    if mu.shape != h.a.shape:
        raise DimensionMismatch("hyperplane and mean lengths differ")
    variance = float(h.a @ noise.apply(h.a)) / norm ** 2
    return ProjectionStats((float(h.a @ mu) + h.b) / norm, variance)


def pairwise_conditional_success(mean0, mean1, noise: NoiseModel, prior=None) -> tuple[float, float]:
    """``(P(decide 0 | 0), P(decide 1 | 1))`` for the MAP rule.

    With whitened separation ``d`` and ``r = ln(p0/p1)`` these are
    ``Phi(d/2 + r/d)`` and ``Phi(d/2 - r/d)``.
    """
    m0, m1 = _pair(mean0, mean1, noise)
    prior = _as_prior(prior, 2)
    p0, p1 = (float(w) for w in prior.weights)
    d = float(np.linalg.norm(noise.whiten(m0 - m1)))
    if p0 == 0 or p1 == 0 or d == 0:
        # MAP always picks the heavier scenario; ties go to scenario 0
        return (1.0, 0.0) if p0 >= p1 else (0.0, 1.0)
    r = math.log(p0 / p1)
    return float(ndtr(d / 2 + r / d)), float(ndtr(d / 2 - r / d))


def pairwise_success_probability(mean0, mean1, noise: NoiseModel, prior=None) -> float:
    """Prior-weighted probability that the MAP rule names the true scenario."""
    prior = _as_prior(prior, 2)
    c0, c1 = pairwise_conditional_success(mean0, mean1, noise, prior)
    p0, p1 = prior.weights
    return float(min(1.0, p0 * c0 + p1 * c1))


def pairwise_success_via_hyperplane(mean0, mean1, noise: NoiseModel, prior=None) -> float:
    """Same quantity as :func:`pairwise_success_probability`, via the projected distances.

    Kept as an independent route through :func:`projection_stats`.
    """
    prior = _as_prior(prior, 2)
    h = decision_hyperplane(mean0, mean1, noise, prior)
    s0 = projection_stats(h, mean0, noise)
    s1 = projection_stats(h, mean1, noise)
    # scenario 0 is chosen where the signed distance is positive
    c0 = 0.5 * (1 - erf(-s0.mean / math.sqrt(2 * s0.variance)))
    c1 = 0.5 * (1 + erf(-s1.mean / math.sqrt(2 * s1.variance)))
    p0, p1 = prior.weights
    return float(p0 * c0 + p1 * c1)


@dataclass(frozen=True)
class NeymanPearsonRule:
    """Decide scenario 1 iff ``L(y) >= threshold``, i.e. ``ln L(y) >= log_threshold``."""

    log_threshold: float
    miss_probability: float
    false_alarm_probability: float
    separation: float

    @property
    def threshold(self) -> float:
        try:
            return math.exp(self.log_threshold)
        except OverflowError:
            return math.inf

    def describe(self) -> str:
        return (f"decide v1 iff ln L(y) >= {self.log_threshold:.12g} "
                f"(P(miss)={self.miss_probability:.6g}, P(false alarm)={self.false_alarm_probability:.6g})")


def np_threshold(mean0, mean1, noise: NoiseModel, beta: float) -> NeymanPearsonRule:
    """Likelihood-ratio threshold whose miss probability ``P(decide 0 | 1)`` equals ``beta``.

    Under scenario ``i`` the log-likelihood ratio is Gaussian with mean
    ``(2i - 1) d^2 / 2`` and variance ``d^2``, where ``d`` is the whitened
    separation, so the threshold is ``d^2/2 + d * Phi^{-1}(beta)``.
    """
    if not 0 < beta < 1:
        raise InputError(f"beta must lie in (0, 1), got {beta!r}")
    m0, m1 = _pair(mean0, mean1, noise)
    d = float(np.linalg.norm(noise.whiten(m1 - m0)))
    if d == 0:
        raise DegenerateHypotheses("identical means: a deterministic threshold cannot meet beta")
    q = float(ndtri(beta))
    log_lam = d * d / 2 + d * q
    miss = float(ndtr((log_lam - d * d / 2) / d))
    false_alarm = float(ndtr(-(log_lam + d * d / 2) / d))
    return NeymanPearsonRule(log_lam, miss, false_alarm, d)


@dataclass(frozen=True, eq=False)
class HalfspaceSystem:
    """Unit-normal rows ``A`` and offsets ``b``: the reference wins iff ``A @ y + b > 0``."""

    A: np.ndarray
    b: np.ndarray
    reference: int = 0

    def contains(self, Y) -> np.ndarray:
        return np.all(np.atleast_2d(Y) @ self.A.T + self.b > 0, axis=1)


def halfspace_system(means: Sequence, reference: int, noise: NoiseModel) -> HalfspaceSystem:
    M = _stack(means, noise)
    n = M.shape[0]
    if n < 2:
        raise EmptyScenarioSet("need at least two scenarios")
    if not 0 <= reference < n:
        raise InputError(f"reference index {reference} out of range")
    mi = M[reference]
    rows, offsets = [], []
    for k in range(n):
        if k == reference:
            continue
        a = noise.solve(mi - M[k])
        norm = float(np.linalg.norm(a))
        if norm == 0:
            raise DuplicateMean(f"scenario {k} has the same mean as the reference {reference}")
        rows.append(a / norm)
        offsets.append(-0.5 * float(a @ (mi + M[k])) / norm)
    return HalfspaceSystem(np.array(rows), np.array(offsets), reference)


def _power_iteration_sigma(A: np.ndarray, rtol: float = 1e-14, max_iter: int = 100_000) -> float:
    # deterministic pseudo-random start avoids orthogonality to the top singular vector
    v = uniform_stream(0x5EED, 0, A.shape[1]) - 0.5
    v /= np.linalg.norm(v)
    lam = 0.0
    for _ in range(max_iter):
        w = A.T @ (A @ v)
        new = float(np.linalg.norm(w))
        if new == 0:
            return 0.0
        v = w / new
        if abs(new - lam) <= rtol * new:
            lam = new
            break
        lam = new
    return float(np.linalg.norm(A @ v))


def largest_singular_value(A, dense_limit: int = DENSE_SVD_LIMIT) -> float:
    """Spectral norm of ``A``: dense SVD up to ``dense_limit``, power iteration on ``A^T A`` beyond."""
    A = np.asarray(A, dtype=float)
    if A.ndim == 1:
        A = A[:, None]
    if A.size == 0:
        return 0.0
    if min(A.shape) <= dense_limit:
        return float(np.linalg.svd(A, compute_uv=False)[0])
    return _power_iteration_sigma(A)


@dataclass(frozen=True)
class LinearSystemBoundInput:
    sigma_max: float
    magnitude: float
    noise_variance: float
    prior_null: float

    def __post_init__(self):
        if not self.sigma_max >= 0:
            raise InputError("sigma_max must be nonnegative")
        if not self.magnitude >= 0:
            raise InputError("input magnitude bound must be nonnegative")
        if not self.noise_variance > 0:
            raise InputError("noise variance must be positive")
        if not 0 <= self.prior_null <= 1:
            raise InputError("prior_null must lie in [0, 1]")


def linear_system_upper_bound(inp: LinearSystemBoundInput) -> float:
    """Success bound for detecting any nonzero input of norm at most ``magnitude`` through ``y = A u + e``."""
    z = inp.sigma_max * inp.magnitude / (2 * math.sqrt(2 * inp.noise_variance))
    detect = 0.5 * (1 + float(erf(z)))
    return float(min(1.0, inp.prior_null + detect * (1 - inp.prior_null)))

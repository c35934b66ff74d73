"""Reference computations that share no code with the package."""

import math

import mpmath
import numpy as np
from scipy import integrate, optimize
from scipy.stats import multivariate_normal, norm

mpmath.mp.dps = 40


def Phi(x) -> float:
    return float(mpmath.ncdf(x))


def log_density(y, mean, cov):
    return multivariate_normal(mean=np.asarray(mean, float), cov=np.asarray(cov, float)).logpdf(y)


def brute_map(y, means, prior, cov):
    """Index maximising ln p_i + ln f_i(y), evaluated from scratch; first index wins ties."""
    scores = [math.log(p) + log_density(y, m, cov) if p > 0 else -math.inf for m, p in zip(means, prior)]
    return int(np.argmax(scores))


def isotropic_success(mu0, mu1, sigma):
    d = float(np.linalg.norm(np.asarray(mu0, float) - np.asarray(mu1, float)))
    return float(mpmath.ncdf(mpmath.mpf(d) / (2 * mpmath.mpf(sigma))))


def collection_success_1d(v0, v1, prior, sigma=1.0, lo=-40.0, hi=40.0):
    """Bayes success for two collections of 1-D Gaussian means, by quadrature.

    The integrand is max(mass0(y), mass1(y)); integrating it gives the
    probability that the larger-posterior collection is the true one.
    """
    p0, p1 = prior[:len(v0)], prior[len(v0):]

    def mass(y, ms, ps):
        return sum(p * norm.pdf(y, m, sigma) for m, p in zip(ms, ps))

    def diff(y):
        return mass(y, v0, p0) - mass(y, v1, p1)

    grid = np.linspace(lo, hi, 20001)
    vals = diff(grid)
    cuts = [optimize.brentq(diff, grid[i], grid[i + 1])
            for i in range(len(grid) - 1) if vals[i] * vals[i + 1] < 0]
    edges = [lo] + cuts + [hi]
    total = 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        total += integrate.quad(lambda y: max(mass(y, v0, p0), mass(y, v1, p1)), a, b,
                                epsabs=1e-13, epsrel=1e-12)[0]
    return total


def random_spd(rng, T, cond=50.0):
    Q, _ = np.linalg.qr(rng.normal(size=(T, T)))
    eig = np.exp(rng.uniform(0, math.log(cond), size=T))
    return (Q * eig) @ Q.T

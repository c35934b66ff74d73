"""Additive Gaussian noise models.

Every quadratic form in the package goes through :meth:`NoiseModel.whiten`,
which applies ``L^{-1}`` for the Cholesky factor ``Sigma = L L^T``. The inverse
covariance is never formed.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.linalg import cho_factor, solve_triangular

from .errors import DimensionMismatch, InputError, NotPositiveDefinite

_SYMMETRY_RTOL = 1e-10


@dataclass(frozen=True, eq=False)
class NoiseModel:
    """Zero-mean Gaussian disturbance, either ``variance * I`` or a full covariance.

    Use :meth:`isotropic` or :meth:`full` rather than the constructor.
    An isotropic model applies to signals of any length; a full model fixes
    the dimension to ``covariance.shape[0]``.
    """

    kind: str
    variance: float | None = None
    covariance: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.kind == "isotropic":
            v = self.variance
            if v is None or not np.isfinite(v) or v <= 0:
                raise NotPositiveDefinite(f"isotropic variance must be positive, got {v!r}")
        elif self.kind == "full":
            cov = self.covariance
            if cov is None or cov.ndim != 2 or cov.shape[0] != cov.shape[1] or cov.shape[0] == 0:
                raise DimensionMismatch("full covariance must be a non-empty square matrix")
            if not np.all(np.isfinite(cov)):
                raise NotPositiveDefinite("covariance contains non-finite entries")
            scale = max(float(np.max(np.abs(cov))), 1.0)
            if not np.allclose(cov, cov.T, rtol=0.0, atol=_SYMMETRY_RTOL * scale):
                raise NotPositiveDefinite("covariance is not symmetric")
            # factor eagerly so an invalid matrix fails at construction
            self._factor
        else:
            raise InputError(f"unknown noise kind {self.kind!r}")

    @classmethod
    def isotropic(cls, variance: float) -> NoiseModel:
        return cls(kind="isotropic", variance=float(variance))

    @classmethod
    def full(cls, covariance) -> NoiseModel:
        cov = np.array(covariance, dtype=float)
        cov.setflags(write=False)
        return cls(kind="full", covariance=cov)

    @property
    def dim(self) -> int | None:
        """Fixed dimension, or ``None`` for isotropic noise."""
        return None if self.kind == "isotropic" else self.covariance.shape[0]

    @cached_property
    def _factor(self) -> np.ndarray:
        try:
            c, _ = cho_factor(self.covariance, lower=True, check_finite=False)
        except np.linalg.LinAlgError as exc:
            raise NotPositiveDefinite(f"covariance is not positive definite: {exc}") from None
        L = np.tril(c)
        L.setflags(write=False)
        return L

    def cholesky(self, dim: int | None = None) -> np.ndarray:
        """Lower Cholesky factor of the covariance, materialised for ``dim`` if isotropic."""
        if self.kind == "isotropic":
            if dim is None:
                raise DimensionMismatch("isotropic noise needs an explicit dimension")
            return np.sqrt(self.variance) * np.eye(dim)
        self.check_dim(dim)
        return self._factor

    def matrix(self, dim: int | None = None) -> np.ndarray:
        if self.kind == "isotropic":
            if dim is None:
                raise DimensionMismatch("isotropic noise needs an explicit dimension")
            return self.variance * np.eye(dim)
        self.check_dim(dim)
        return self.covariance

    def check_dim(self, dim: int | None) -> None:
        if dim is not None and self.dim is not None and dim != self.dim:
            raise DimensionMismatch(f"noise has dimension {self.dim}, signal has {dim}")

    def whiten(self, x) -> np.ndarray:
        """Apply ``L^{-1}`` along the last axis of ``x``."""
        x = np.asarray(x, dtype=float)
        self.check_dim(x.shape[-1])
        if self.kind == "isotropic":
            return x / np.sqrt(self.variance)
        if x.ndim == 1:
            return solve_triangular(self._factor, x, lower=True, check_finite=False)
        flat = x.reshape(-1, x.shape[-1])
        out = solve_triangular(self._factor, flat.T, lower=True, check_finite=False).T
        return out.reshape(x.shape)

    def colour(self, z) -> np.ndarray:
        """Apply ``L`` along the last axis of ``z``: maps white noise to this model."""
        z = np.asarray(z, dtype=float)
        self.check_dim(z.shape[-1])
        if self.kind == "isotropic":
            return z * np.sqrt(self.variance)
        return z @ self._factor.T

    def solve(self, x) -> np.ndarray:
        """``Sigma^{-1} x`` via two triangular solves."""
        x = np.asarray(x, dtype=float)
        self.check_dim(x.shape[-1])
        if self.kind == "isotropic":
            return x / self.variance
        w = solve_triangular(self._factor, x, lower=True, check_finite=False)
        return solve_triangular(self._factor, w, lower=True, trans="T", check_finite=False)

    def apply(self, x) -> np.ndarray:
        """``Sigma x``."""
        x = np.asarray(x, dtype=float)
        self.check_dim(x.shape[-1])
        if self.kind == "isotropic":
            return self.variance * x
        return self.covariance @ x

    def mahalanobis_sq(self, x) -> np.ndarray:
        w = self.whiten(x)
        return np.sum(w * w, axis=-1)

    def scaled(self, factor: float) -> NoiseModel:
        if self.kind == "isotropic":
            return NoiseModel.isotropic(self.variance * factor)
        return NoiseModel.full(self.covariance * factor)

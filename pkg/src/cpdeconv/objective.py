"""Data-fidelity term, TV regularizers and partial gradients.

These are the reference evaluations: each slice is reconstructed and
blurred independently. The solver uses a cached Fourier-domain path
(:class:`cpdeconv.palm.DeconvProblem`) that is tested against these.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .fourier_conv import KernelBank, convolve, residual_term
from .tensor_model import CpdFactors, DimensionMismatch, HsiCube, reconstruct_slice


@dataclass(frozen=True)
class RegWeights:
    """Tikhonov weights for A, B, C and TV weights for A, B."""

    lambda1: float = 0.0
    lambda2: float = 0.0
    lambda3: float = 0.0
    lambda_a: float = 0.0
    lambda_b: float = 0.0

    def __post_init__(self):
        for name in ("lambda1", "lambda2", "lambda3", "lambda_a", "lambda_b"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative, got {getattr(self, name)}")


def _check_dims(factors: CpdFactors, observed: HsiCube, kernels: KernelBank):
    want = (observed.p, observed.q, observed.n)
    if (factors.p, factors.q, factors.n) != want:
        raise DimensionMismatch(f"factor dims {(factors.p, factors.q, factors.n)} do not match cube {want}")
    if (kernels.p, kernels.q, kernels.n) != want:
        raise DimensionMismatch(f"kernel bank dims {(kernels.p, kernels.q, kernels.n)} do not match cube {want}")


def tikhonov(factors: CpdFactors, w: RegWeights) -> float:
    return (
        w.lambda1 * np.sum(factors.a**2)
        + w.lambda2 * np.sum(factors.b**2)
        + w.lambda3 * np.sum(factors.c**2)
    )


def smooth_f(factors: CpdFactors, observed: HsiCube, kernels: KernelBank, w: RegWeights) -> float:
    """Least-squares misfit of the blurred reconstruction plus Tikhonov penalties."""
    _check_dims(factors, observed, kernels)
    misfit = 0.0
    for i in range(observed.n):
        r = observed.slice(i) - convolve(kernels.otfs[i], reconstruct_slice(factors, i))
        misfit += np.sum(r * r)
    return float(0.5 * misfit + tikhonov(factors, w))


def _residual_terms(factors, observed, kernels):
    _check_dims(factors, observed, kernels)
    yhat = np.fft.fft2(observed.data)
    for i in range(observed.n):
        yield i, residual_term(kernels.otfs[i], reconstruct_slice(factors, i), yhat[i])


def grad_a(factors: CpdFactors, observed: HsiCube, kernels: KernelBank, w: RegWeights) -> np.ndarray:
    g = 2.0 * w.lambda1 * factors.a
    for i, s in _residual_terms(factors, observed, kernels):
        g = g + s @ (factors.b * factors.c[i])
    return g


def grad_b(factors: CpdFactors, observed: HsiCube, kernels: KernelBank, w: RegWeights) -> np.ndarray:
    g = 2.0 * w.lambda2 * factors.b
    for i, s in _residual_terms(factors, observed, kernels):
        g = g + s.T @ (factors.a * factors.c[i])
    return g


def grad_c(factors: CpdFactors, observed: HsiCube, kernels: KernelBank, w: RegWeights) -> np.ndarray:
    g = 2.0 * w.lambda3 * factors.c
    for i, s in _residual_terms(factors, observed, kernels):
        # diag(A^T S B) without forming the R x R product
        g[i] += np.einsum("pr,pq,qr->r", factors.a, s, factors.b)
    return g


def tv_norm(v: np.ndarray) -> float:
    """Sum of absolute successive differences of a vector."""
    return float(np.abs(np.diff(np.asarray(v, dtype=np.float64))).sum())


def tv_columns(m: np.ndarray) -> float:
    """Sum of column-wise TV norms of a matrix."""
    return float(np.abs(np.diff(m, axis=0)).sum())


def nonsmooth_g(factors: CpdFactors, w: RegWeights) -> float:
    return w.lambda_a * tv_columns(factors.a) + w.lambda_b * tv_columns(factors.b)


def full_objective(factors: CpdFactors, observed: HsiCube, kernels: KernelBank, w: RegWeights) -> float:
    return smooth_f(factors, observed, kernels, w) + nonsmooth_g(factors, w)

"""Degradation simulator, synthetic low-rank ground truth, RMSE/PSNR.

Random numbers come from numpy's ``default_rng`` (PCG64 seeded through
SeedSequence). Noise for band ``i`` is drawn from its own stream
``default_rng([seed, i])`` with ``standard_normal``, so the output does not
depend on the order bands are processed in.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .fourier_conv import KernelBank
from .tensor_model import CpdFactors, DimensionMismatch, HsiCube, reconstruct_cube

PSNR_CAP = 200.0
TABLE_SCALE = 255.0


@dataclass(frozen=True)
class DegradationSpec:
    """Blur and noise settings. Defaults: 9x9 Gaussian, sigma 2, noise sd 0.01."""

    kernel_size: int = 9
    kernel_sigma: float = 2.0
    noise_sigma: float = 0.01
    seed: int = 0
    spectrally_invariant: bool = True

    def __post_init__(self):
        if self.kernel_size < 1 or self.kernel_size % 2 == 0:
            raise ValueError(f"kernel_size must be odd and >= 1, got {self.kernel_size}")
        if self.kernel_sigma <= 0:
            raise ValueError(f"kernel_sigma must be positive, got {self.kernel_sigma}")
        if self.noise_sigma < 0:
            raise ValueError(f"noise_sigma must be non-negative, got {self.noise_sigma}")
        if not self.spectrally_invariant:
            raise ValueError("only spectrally invariant blur is simulated")


def gaussian_kernel(size: int, sigma: float) -> np.ndarray:
    """Normalized ``exp(-(x^2 + y^2) / (2 sigma^2))`` on a centered integer grid."""
    if size < 1 or size % 2 == 0:
        raise ValueError(f"kernel size must be odd and >= 1, got {size}")
    if sigma <= 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    x = np.arange(size) - size // 2
    g = np.exp(-(x[:, None] ** 2 + x[None, :] ** 2) / (2.0 * sigma**2))
    return g / g.sum()


def degrade(clean: HsiCube, spec: DegradationSpec) -> tuple[HsiCube, KernelBank]:
    """Blur every band circularly and add i.i.d. Gaussian noise.

    Returns the observation and the true kernel bank (non-blind setting).
    """
    if spec.kernel_size > min(clean.p, clean.q):
        raise ValueError(f"kernel size {spec.kernel_size} larger than the image plane ({clean.p}, {clean.q})")
    kernels = KernelBank.from_kernel(gaussian_kernel(spec.kernel_size, spec.kernel_sigma), clean.p, clean.q, clean.n)
    observed = kernels.blur(clean.data)
    if spec.noise_sigma > 0:
        for i in range(clean.n):
            rng = np.random.default_rng([spec.seed, i])
            observed[i] += spec.noise_sigma * rng.standard_normal((clean.p, clean.q))
    return HsiCube(observed), kernels


def _moving_average(m: np.ndarray) -> np.ndarray:
    # circular 3-tap average down each column, periodic like the blur model
    return (np.roll(m, 1, axis=0) + m + np.roll(m, -1, axis=0)) / 3.0


def synth_lowrank(p: int, q: int, n: int, r: int, seed: int = 0, smoothness: int = 32) -> tuple[HsiCube, CpdFactors]:
    """Random non-negative rank-``r`` cube with max value 1, plus its factors.

    Spatial factor columns get ``smoothness`` passes of a circular 3-tap
    moving average (periodic, like the blur). The overall scale is split
    evenly across the three factors.
    """
    if min(p, q, n) < 1:
        raise ValueError("dimensions must be >= 1")
    if r < 1:
        raise ValueError(f"rank must be >= 1, got {r}")
    if smoothness < 0:
        raise ValueError(f"smoothness must be >= 0, got {smoothness}")
    rng = np.random.default_rng(seed)
    a = rng.uniform(0.0, 1.0, (p, r))
    b = rng.uniform(0.0, 1.0, (q, r))
    c = rng.uniform(0.0, 1.0, (n, r))
    for _ in range(smoothness):
        a = _moving_average(a)
        b = _moving_average(b)
    peak = reconstruct_cube(CpdFactors(a, b, c)).data.max()
    s = peak ** (-1.0 / 3.0)
    factors = CpdFactors(a * s, b * s, c * s)
    cube = reconstruct_cube(factors)
    # the cube max can miss 1 by an ulp after the cube-root split; fold it into C
    factors.c = factors.c / cube.data.max()
    cube = reconstruct_cube(factors)
    return cube, factors


def _check_same(ref: HsiCube, test: HsiCube):
    if ref.shape != test.shape:
        raise DimensionMismatch(f"dimension mismatch: {ref.shape} vs {test.shape}")


def rmse(ref: HsiCube, test: HsiCube) -> float:
    """Root-mean-square difference in native units."""
    _check_same(ref, test)
    d = ref.data - test.data
    return math.sqrt(float(np.mean(d * d)))


def psnr(ref: HsiCube, test: HsiCube, peak: float = 1.0, cap: float = PSNR_CAP) -> float:
    """``20 log10(peak / rmse)``, capped when the error is below ``peak * 1e-10``."""
    if peak <= 0:
        raise ValueError(f"peak must be positive, got {peak}")
    e = rmse(ref, test)
    if e < peak * 1e-10:
        return cap
    return 20.0 * math.log10(peak / e)

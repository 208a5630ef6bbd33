"""Cube and CPD factor containers, slice/cube reconstruction, parameter counts.

Cubes are stored slice-major: ``data[i]`` is the P x Q frontal slice of
band ``i``, so each slice is a contiguous row-major block.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class DimensionMismatch(ValueError):
    """Cube, factor or kernel dimensions do not agree."""


@dataclass
class HsiCube:
    """Dense P x Q x N real cube, stored as an (N, P, Q) float64 array."""

    data: np.ndarray

    def __post_init__(self):
        self.data = np.ascontiguousarray(self.data, dtype=np.float64)
        if self.data.ndim != 3 or min(self.data.shape) < 1:
            raise ValueError(f"cube data must be a non-empty 3-D array, got shape {self.data.shape}")

    @classmethod
    def zeros(cls, p: int, q: int, n: int) -> "HsiCube":
        return cls(np.zeros((n, p, q)))

    @property
    def p(self) -> int:
        return self.data.shape[1]

    @property
    def q(self) -> int:
        return self.data.shape[2]

    @property
    def n(self) -> int:
        return self.data.shape[0]

    @property
    def shape(self) -> tuple[int, int, int]:
        """(P, Q, N), the order used throughout the file formats."""
        return self.p, self.q, self.n

    def slice(self, i: int) -> np.ndarray:
        return self.data[i]


@dataclass
class CpdFactors:
    """Non-negative CPD factors: A (P x R), B (Q x R), C (N x R)."""

    a: np.ndarray
    b: np.ndarray
    c: np.ndarray

    def __post_init__(self):
        self.a = np.asarray(self.a, dtype=np.float64)
        self.b = np.asarray(self.b, dtype=np.float64)
        self.c = np.asarray(self.c, dtype=np.float64)
        for name, m in (("a", self.a), ("b", self.b), ("c", self.c)):
            if m.ndim != 2:
                raise ValueError(f"factor {name} must be 2-D, got shape {m.shape}")
        r = self.a.shape[1]
        if r < 1 or self.b.shape[1] != r or self.c.shape[1] != r:
            raise ValueError(
                f"factor column counts disagree or are zero: "
                f"{self.a.shape[1]}, {self.b.shape[1]}, {self.c.shape[1]}"
            )

    @property
    def r(self) -> int:
        return self.a.shape[1]

    @property
    def p(self) -> int:
        return self.a.shape[0]

    @property
    def q(self) -> int:
        return self.b.shape[0]

    @property
    def n(self) -> int:
        return self.c.shape[0]

    def is_nonnegative(self) -> bool:
        return bool((self.a >= 0).all() and (self.b >= 0).all() and (self.c >= 0).all())

    def copy(self) -> "CpdFactors":
        return CpdFactors(self.a.copy(), self.b.copy(), self.c.copy())


def reconstruct_slice(factors: CpdFactors, i: int) -> np.ndarray:
    """Frontal slice ``X_i = A diag(C[i]) B^T``."""
    if not 0 <= i < factors.n:
        raise IndexError(f"band index {i} out of range [0, {factors.n})")
    return (factors.a * factors.c[i]) @ factors.b.T


def reconstruct_cube(factors: CpdFactors) -> HsiCube:
    """Full cube from its CPD factors, one matrix product per slice."""
    out = np.empty((factors.n, factors.p, factors.q))
    for i in range(factors.n):
        out[i] = reconstruct_slice(factors, i)
    return HsiCube(out)


def parameter_count(p: int, q: int, n: int, r: int) -> int:
    """Number of free parameters of a rank-``r`` CPD of a P x Q x N cube."""
    return (p + q + n) * r

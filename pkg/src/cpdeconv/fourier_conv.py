"""DFT-based circular 2-D convolution and the per-slice residual term."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .tensor_model import DimensionMismatch

# Max tolerated imaginary residue after an inverse transform of a real result.
IMAG_TOL = 1e-9


def center_and_pad(kernel: np.ndarray, p: int, q: int) -> np.ndarray:
    """Zero-pad an odd k x k kernel to P x Q with its center moved to (0, 0).

    Multiplying by the DFT of the result then convolves with the kernel
    centered on each pixel (circular boundary).
    """
    kernel = np.asarray(kernel, dtype=np.float64)
    if kernel.ndim != 2:
        raise ValueError(f"kernel must be 2-D, got shape {kernel.shape}")
    kh, kw = kernel.shape
    if kh % 2 == 0 or kw % 2 == 0:
        raise ValueError(f"kernel sides must be odd, got {kernel.shape}")
    if kh > p or kw > q:
        raise ValueError(f"kernel {kernel.shape} larger than the image plane ({p}, {q})")
    out = np.zeros((p, q))
    out[:kh, :kw] = kernel
    return np.roll(out, (-(kh // 2), -(kw // 2)), axis=(0, 1))


def _real_part(z: np.ndarray) -> np.ndarray:
    resid = np.abs(z.imag).max(initial=0.0)
    if resid > IMAG_TOL * max(1.0, np.abs(z.real).max(initial=0.0)):
        raise ArithmeticError(f"inverse transform has imaginary residue {resid:.3e}")
    return np.ascontiguousarray(z.real)


def _check_shapes(*arrays):
    shape = arrays[0].shape
    for a in arrays[1:]:
        if a.shape != shape:
            raise DimensionMismatch(f"shape mismatch: {shape} vs {a.shape}")


def convolve(otf: np.ndarray, image: np.ndarray) -> np.ndarray:
    """Circular convolution ``IDFT(otf * DFT(image))``."""
    image = np.asarray(image, dtype=np.float64)
    _check_shapes(otf, image)
    return _real_part(np.fft.ifft2(otf * np.fft.fft2(image)))


def residual_term(otf_i: np.ndarray, x_i: np.ndarray, yhat_i: np.ndarray) -> np.ndarray:
    """Gradient of ``0.5 * ||Y_i - H_i * X_i||_F^2`` with respect to ``X_i``.

    Computed as ``IDFT(conj(otf) * (otf * DFT(X_i) - DFT(Y_i)))``. The
    conjugate is the adjoint of the blur; it equals the OTF itself only
    for centro-symmetric kernels.
    """
    x_i = np.asarray(x_i, dtype=np.float64)
    _check_shapes(otf_i, x_i, yhat_i)
    resid = otf_i * np.fft.fft2(x_i) - yhat_i
    return _real_part(np.fft.ifft2(np.conj(otf_i) * resid))


@dataclass(frozen=True)
class KernelBank:
    """Per-band blur kernels in centered P x Q layout, with their OTFs.

    ``kernels`` and ``otfs`` are (N, P, Q) arrays; OTFs are derived on
    construction and never set directly.
    """

    kernels: np.ndarray
    otfs: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        k = np.ascontiguousarray(self.kernels, dtype=np.float64)
        if k.ndim != 3:
            raise ValueError(f"kernel bank must be (N, P, Q), got shape {k.shape}")
        k.setflags(write=False)
        otfs = np.fft.fft2(k)
        otfs.setflags(write=False)
        object.__setattr__(self, "kernels", k)
        object.__setattr__(self, "otfs", otfs)

    @classmethod
    def from_kernel(cls, kernel: np.ndarray, p: int, q: int, n: int) -> "KernelBank":
        """Same small odd kernel for every band (spectrally invariant blur)."""
        plane = center_and_pad(kernel, p, q)
        return cls(np.broadcast_to(plane, (n, p, q)))

    @classmethod
    def from_kernels(cls, kernels, p: int, q: int) -> "KernelBank":
        return cls(np.stack([center_and_pad(k, p, q) for k in kernels]))

    @property
    def n(self) -> int:
        return self.kernels.shape[0]

    @property
    def p(self) -> int:
        return self.kernels.shape[1]

    @property
    def q(self) -> int:
        return self.kernels.shape[2]

    def blur(self, data: np.ndarray) -> np.ndarray:
        """Blur a whole (N, P, Q) stack, slice i with kernel i."""
        if data.shape != self.kernels.shape:
            raise DimensionMismatch(f"shape mismatch: {data.shape} vs {self.kernels.shape}")
        return _real_part(np.fft.ifft2(self.otfs * np.fft.fft2(data)))

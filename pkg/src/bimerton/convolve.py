"""Discrete convolution of the weight array with a value surface.

The continuation value at an interior node is

    u[n, j] = sum_{l, d over dagger} phi[l, d] * w[n - l, j - d] * v[l, d].

Zero-extending ``w`` (length 3N-1) and ``phi*v`` (length 2N+1) to any period
``L >= 3N-1`` and taking a cyclic convolution is exact for the retained
indices: wrapped-around terms land at cyclic index ``< 2N``, while the
interior outputs occupy ``[2N, 3N-2]``.  Three period choices are offered:

* ``exact``  -- ``L = 3N-1``, the natural circulant size;
* ``padded`` -- ``L`` = power of two ``>= 5N-1``, a plain linear convolution;
* ``fast``   -- ``L`` = ``scipy.fft.next_fast_len(3N-1)`` (default).
"""
from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
import scipy.fft as sfft

from .kernel import KernelArray
from .model import GridSpec


class EmbedMode(enum.Enum):
    EXACT = "exact"
    PADDED = "padded"
    FAST = "fast"


@dataclass(frozen=True)
class SpectralKernel:
    kernel_hat: np.ndarray
    shape: tuple[int, int]
    N: int
    J: int
    mode: EmbedMode


def _next_pow2(n: int) -> int:
    return 1 << (n - 1).bit_length()


def embed_shape(N: int, J: int, mode) -> tuple[int, int]:
    mode = EmbedMode(mode)
    if mode is EmbedMode.EXACT:
        return 3 * N - 1, 3 * J - 1
    if mode is EmbedMode.PADDED:
        return _next_pow2(5 * N - 1), _next_pow2(5 * J - 1)
    return sfft.next_fast_len(3 * N - 1, real=True), sfft.next_fast_len(3 * J - 1, real=True)


def plan(kernel: KernelArray, grid: GridSpec, mode=EmbedMode.FAST) -> SpectralKernel:
    if (kernel.N, kernel.J) != (grid.N, grid.J) or kernel.weights.shape != grid.ddagger_shape:
        raise ValueError(
            f"kernel built for N={kernel.N}, J={kernel.J} does not match grid N={grid.N}, J={grid.J}")
    mode = EmbedMode(mode)
    shape = embed_shape(grid.N, grid.J, mode)
    khat = sfft.rfft2(kernel.weights, s=shape, workers=-1)
    khat.setflags(write=False)
    return SpectralKernel(khat, shape, grid.N, grid.J, mode)


def _check_surface(values, N, J):
    if values.shape != (2 * N + 1, 2 * J + 1):
        raise ValueError(f"surface shape {values.shape} != dagger shape {(2 * N + 1, 2 * J + 1)}")
    if not np.all(np.isfinite(values)):
        raise FloatingPointError("surface contains non-finite values")


def convolve_step(spec: SpectralKernel, values: np.ndarray, phi) -> np.ndarray:
    """Continuation values on interior nodes, shape ``(N-1, J-1)``."""
    N, J = spec.N, spec.J
    _check_surface(values, N, J)
    phi_x, phi_y = phi
    weighted = values * phi_x[:, None] * phi_y[None, :]
    vhat = sfft.rfft2(weighted, s=spec.shape, workers=-1)
    vhat *= spec.kernel_hat
    full = sfft.irfft2(vhat, s=spec.shape, workers=-1)
    return full[2 * N:3 * N - 1, 2 * J:3 * J - 1]


def convolve_direct(kernel: KernelArray, values: np.ndarray, phi) -> np.ndarray:
    """Literal double sum over the dagger box; intended for N, J <= 64."""
    N, J = kernel.N, kernel.J
    _check_surface(values, N, J)
    phi_x, phi_y = phi
    w = kernel.weights
    cx, cy = kernel.center
    out = np.zeros((N - 1, J - 1))
    for a, n in enumerate(range(-N // 2 + 1, N // 2)):
        for b, j in enumerate(range(-J // 2 + 1, J // 2)):
            acc = 0.0
            for l in range(-N, N + 1):
                wrow = w[cx + n - l]
                vrow = values[l + N]
                fl = phi_x[l + N]
                for d in range(-J, J + 1):
                    acc += fl * phi_y[d + J] * wrow[cy + j - d] * vrow[d + J]
            out[a, b] = acc
    return out


def convolve_einsum(kernel: KernelArray, values: np.ndarray, phi) -> np.ndarray:
    """Vectorised direct summation (no transforms); exact same sum as above."""
    N, J = kernel.N, kernel.J
    _check_surface(values, N, J)
    phi_x, phi_y = phi
    cx, cy = kernel.center
    n = np.arange(-N // 2 + 1, N // 2)
    l = np.arange(-N, N + 1)
    j = np.arange(-J // 2 + 1, J // 2)
    d = np.arange(-J, J + 1)
    ix = cx + n[:, None] - l[None, :]
    iy = cy + j[:, None] - d[None, :]
    w4 = kernel.weights[ix[:, :, None, None], iy[None, None, :, :]]
    weighted = values * phi_x[:, None] * phi_y[None, :]
    return np.einsum("albd,ld->ab", w4, weighted)

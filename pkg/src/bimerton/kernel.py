"""Green's-function weights for one timestep of the two-asset Merton model.

The transition density over ``dtau`` is a Poisson mixture of bivariate
Gaussians: term ``k`` (k jumps) has covariance ``dtau*C + k*C_M`` and mean
``-(dtau*beta + k*mu)`` in displacement coordinates ``z = x - x'``.  Every
term is nonnegative, so truncating the series keeps the scheme monotone.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .model import DerivedModel, GridSpec, det2, validate

MAX_TERMS = 200


class TruncationError(RuntimeError):
    """Raised when the series truncation order exceeds the hard cap."""


@dataclass(frozen=True)
class SeriesTerm:
    k: int
    mean_shift: np.ndarray
    cov_k: np.ndarray
    poisson_weight: float
    theta: float


@dataclass(frozen=True)
class KernelArray:
    """Rescaled weights ``dx*dy*g(p*dx, q*dy)`` over all displacements.

    ``weights[p + 3N/2 - 1, q + 3J/2 - 1]`` holds displacement ``(p, q)``.
    """

    weights: np.ndarray
    K: int
    epsilon: float
    dtau: float
    N: int
    J: int
    dx: float
    dy: float

    @property
    def center(self) -> tuple[int, int]:
        return 3 * self.N // 2 - 1, 3 * self.J // 2 - 1


def default_epsilon(dtau: float) -> float:
    return max(1e-8 * dtau**2, 1e-14)


def truncation_test(model, dtau: float, k: int) -> float:
    """Bound on the series tail beyond ``k`` terms, i.e. the loop test."""
    model = validate(model)
    p = model.params
    det_c = dtau**2 * det2(model.cov_diff)
    pref = math.exp(-(p.r + p.lam) * dtau) / (2 * math.pi * math.sqrt(det_c))
    if p.lam == 0:
        return 0.0
    a = math.e * p.lam * dtau
    # (a)^(k+1) / (k+1)^(k+1) in log space; the power overflows for large k
    return pref * math.exp((k + 1) * (math.log(a) - math.log(k + 1)))


def select_truncation_K(model, dtau: float, epsilon: float, max_terms: int = MAX_TERMS) -> int:
    """Smallest ``K`` whose tail test drops below ``epsilon``."""
    if not epsilon > 0:
        raise ValueError(f"epsilon must be > 0, got {epsilon!r}")
    if not dtau > 0:
        raise ValueError(f"dtau must be > 0, got {dtau!r}")
    k = 0
    test = truncation_test(model, dtau, k)
    while test >= epsilon:
        k += 1
        if k > max_terms:
            raise TruncationError(
                f"truncation order exceeded {max_terms} (test={test:.3e}, epsilon={epsilon:.3e})")
        test = truncation_test(model, dtau, k)
    return k


def series_term(model, dtau: float, k: int) -> SeriesTerm:
    model = validate(model)
    p = model.params
    return SeriesTerm(
        k=k,
        mean_shift=dtau * model.drift + k * model.mu_jump,
        cov_k=dtau * model.cov_diff + k * model.cov_jump,
        poisson_weight=(p.lam * dtau) ** k / math.factorial(k) if k else 1.0,
        theta=-(p.r + p.lam) * dtau,
    )


def _eval_term(term: SeriesTerm, zx, zy):
    c = term.cov_k
    det = det2(c)
    a = zx + term.mean_shift[0]
    b = zy + term.mean_shift[1]
    quad = (c[1][1] * a * a - 2.0 * c[0][1] * a * b + c[0][0] * b * b) / det
    return (term.poisson_weight / (2 * math.pi * math.sqrt(det))) * np.exp(term.theta - 0.5 * quad)


def eval_series_term(model, dtau: float, k: int, z):
    """Density contribution of exactly ``k`` jumps at displacement ``z``.

    ``z`` is a pair ``(zx, zy)`` of broadcastable arrays or scalars.
    """
    if k < 0:
        raise ValueError(f"k must be >= 0, got {k}")
    zx, zy = z
    out = _eval_term(series_term(model, dtau, k), np.asarray(zx, float), np.asarray(zy, float))
    return float(out) if np.ndim(out) == 0 else out


def green_density(model, dtau: float, K: int, zx, zy):
    """Truncated Green's function ``sum_{k<=K}`` on a displacement mesh."""
    model = validate(model)
    zx = np.asarray(zx, float)
    zy = np.asarray(zy, float)
    total = np.zeros(np.broadcast_shapes(zx.shape, zy.shape))
    for k in range(K + 1):
        total += _eval_term(series_term(model, dtau, k), zx, zy)
    return total


def build_kernel(model, grid: GridSpec, epsilon: float | None = None) -> KernelArray:
    """Rescaled weight array for ``grid`` (built once per pricing run)."""
    model = validate(model)
    if not math.isclose(model.params.T, grid.T, rel_tol=1e-12):
        raise ValueError(f"grid maturity {grid.T} does not match model maturity {model.params.T}")
    dtau = grid.dtau
    eps = default_epsilon(dtau) if epsilon is None else float(epsilon)
    K = select_truncation_K(model, dtau, eps)
    g = green_density(model, dtau, K, grid.x_disp[:, None], grid.y_disp[None, :])
    w = g * (grid.dx * grid.dy)
    w.setflags(write=False)
    return KernelArray(w, K, eps, dtau, grid.N, grid.J, grid.dx, grid.dy)


def kernel_mass(kernel: KernelArray, weights_1d) -> float:
    """Quadrature mass ``sum phi_{l,d} w[-l, -d]`` seen by the centre node."""
    phi_x, phi_y = weights_1d
    N, J = kernel.N, kernel.J
    cx, cy = kernel.center
    # displacement -l for l = -N..N, reversed so it aligns with phi
    block = kernel.weights[cx - N:cx + N + 1, cy - J:cy + J + 1][::-1, ::-1]
    return float(phi_x @ block @ phi_y)


def jump_charfn(model, eta):
    """Characteristic function of ``(ln xi_x, ln xi_y)`` at ``eta``."""
    model = validate(model)
    ex, ey = np.asarray(eta[0], float), np.asarray(eta[1], float)
    cm = model.cov_jump
    mu = model.mu_jump
    quad = cm[0, 0] * ex * ex + 2 * cm[0, 1] * ex * ey + cm[1, 1] * ey * ey
    return np.exp(1j * (mu[0] * ex + mu[1] * ey) - 0.5 * quad)


def fourier_symbol(model, eta):
    """Exponent ``Psi(eta)`` with ``G(eta, dtau) = exp(Psi(eta) * dtau)``.

    Uses the transform convention ``G(eta) = int exp(-i eta.z) g(z) dz``.
    """
    model = validate(model)
    p = model.params
    ex, ey = np.asarray(eta[0], float), np.asarray(eta[1], float)
    c = model.cov_diff
    quad = c[0, 0] * ex * ex + 2 * c[0, 1] * ex * ey + c[1, 1] * ey * ey
    b = model.drift
    out = -0.5 * quad + 1j * (b[0] * ex + b[1] * ey) - (p.r + p.lam)
    if p.lam:
        out = out + p.lam * jump_charfn(model, (ex, ey))
    return complex(out) if np.ndim(out) == 0 else out


def kernel_transform(kernel: KernelArray, eta):
    """Discrete transform ``sum_p w_p exp(-i eta.z_p)`` of the weight array."""
    cx, cy = kernel.center
    zx = (np.arange(kernel.weights.shape[0]) - cx) * kernel.dx
    zy = (np.arange(kernel.weights.shape[1]) - cy) * kernel.dy
    ex, ey = eta
    return complex(np.exp(-1j * ex * zx) @ kernel.weights @ np.exp(-1j * ey * zy))


def dump_kernel(kernel: KernelArray, path) -> None:
    """Write the weight array as CSV, row-major, after one header line."""
    path = Path(path)
    with path.open("w") as fh:
        fh.write(f"# N={kernel.N},J={kernel.J},K={kernel.K},"
                 f"epsilon={kernel.epsilon!r},dtau={kernel.dtau!r}\n")
        np.savetxt(fh, kernel.weights, delimiter=",", fmt="%.17g")

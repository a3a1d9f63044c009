"""Bivariate Merton jump-diffusion model, payoffs and grid geometry.

Everything downstream (kernel, convolution, pricer) consumes the validated
:class:`DerivedModel` and the nested-domain :class:`GridSpec` built here.

Grid layout
-----------
For the x-axis with ``N`` interior intervals the node coordinates are
``x_n = x_hat0 + n * dx``.  Three nested index sets are used::

    interior  n in {-N/2+1, ..., N/2-1}        (N-1 nodes)
    dagger    n in {-N, ..., N}                (2N+1 nodes, integration box)
    ddagger   p in {-3N/2+1, ..., 3N/2-1}      (3N-1 displacements)

Arrays over dagger nodes are stored with offset ``N`` (array index
``i = n + N``); displacement arrays use offset ``3N/2 - 1``.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class ModelParams:
    """Risk-neutral parameters of the two-asset Merton model.

    ``lam`` is the common Poisson jump intensity; ``(ln xi_x, ln xi_y)`` is
    bivariate normal with means ``mu_jx, mu_jy``, standard deviations
    ``sigma_jx, sigma_jy`` and correlation ``rho_j``.
    """

    sigma_x: float
    sigma_y: float
    rho: float
    r: float
    lam: float
    mu_jx: float
    mu_jy: float
    sigma_jx: float
    sigma_jy: float
    rho_j: float
    T: float


@dataclass(frozen=True)
class DerivedModel:
    params: ModelParams
    kappa_x: float
    kappa_y: float
    cov_diff: np.ndarray
    cov_jump: np.ndarray
    drift: np.ndarray

    @property
    def mu_jump(self) -> np.ndarray:
        p = self.params
        return np.array([p.mu_jx, p.mu_jy])


def _freeze(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


def validate(params: ModelParams | DerivedModel) -> DerivedModel:
    """Check parameter ranges and assemble compensators and covariances.

    Raises ``ValueError`` naming the offending field.
    """
    if isinstance(params, DerivedModel):
        return params
    p = params
    for name in ("sigma_x", "sigma_y", "rho", "r", "lam", "mu_jx", "mu_jy",
                 "sigma_jx", "sigma_jy", "rho_j", "T"):
        if not math.isfinite(getattr(p, name)):
            raise ValueError(f"{name} must be finite, got {getattr(p, name)!r}")
    for name in ("sigma_x", "sigma_y", "sigma_jx", "sigma_jy", "T"):
        if getattr(p, name) <= 0:
            raise ValueError(f"{name} must be > 0, got {getattr(p, name)!r}")
    if p.lam < 0:
        raise ValueError(f"lam must be >= 0, got {p.lam!r}")
    for name in ("rho", "rho_j"):
        if abs(getattr(p, name)) >= 1:
            raise ValueError(f"|{name}| must be < 1, got {getattr(p, name)!r}")

    kappa_x = math.expm1(p.mu_jx + 0.5 * p.sigma_jx**2)
    kappa_y = math.expm1(p.mu_jy + 0.5 * p.sigma_jy**2)
    cxy = p.rho * p.sigma_x * p.sigma_y
    cov_diff = np.array([[p.sigma_x**2, cxy], [cxy, p.sigma_y**2]])
    jxy = p.rho_j * p.sigma_jx * p.sigma_jy
    cov_jump = np.array([[p.sigma_jx**2, jxy], [jxy, p.sigma_jy**2]])
    drift = np.array([
        p.r - p.lam * kappa_x - 0.5 * p.sigma_x**2,
        p.r - p.lam * kappa_y - 0.5 * p.sigma_y**2,
    ])
    return DerivedModel(p, kappa_x, kappa_y, _freeze(cov_diff),
                        _freeze(cov_jump), _freeze(drift))


def det2(c) -> float:
    return c[0][0] * c[1][1] - c[0][1] * c[1][0]


class PayoffKind(enum.Enum):
    PUT_ON_MIN = "put_on_min"
    PUT_ON_AVERAGE = "put_on_average"


@dataclass(frozen=True)
class Payoff:
    kind: PayoffKind
    strike: float

    def __post_init__(self):
        if not isinstance(self.kind, PayoffKind):
            object.__setattr__(self, "kind", PayoffKind(self.kind))
        if not (self.strike > 0 and math.isfinite(self.strike)):
            raise ValueError(f"strike must be > 0, got {self.strike!r}")

    def __call__(self, x, y):
        return payoff_eval(self, x, y)


def payoff_eval(payoff: Payoff, x, y):
    """Payoff at log-prices ``(x, y)``; broadcasts over arrays."""
    ex, ey = np.exp(x), np.exp(y)
    if payoff.kind is PayoffKind.PUT_ON_MIN:
        under = np.minimum(ex, ey)
    else:
        under = 0.5 * (ex + ey)
    out = np.maximum(payoff.strike - under, 0.0)
    return float(out) if np.ndim(out) == 0 else out


@dataclass(frozen=True)
class IndexSets:
    interior_x: range
    interior_y: range
    dagger_x: range
    dagger_y: range
    ddagger_x: range
    ddagger_y: range


@dataclass(frozen=True)
class GridSpec:
    """Uniform nested grid anchored at ``(x_hat0, y_hat0)``.

    ``half_width_x`` is ``(x_max - x_min) / 2``; all other bounds follow.
    """

    N: int
    J: int
    M: int
    T: float
    x_hat0: float
    y_hat0: float
    half_width_x: float
    half_width_y: float
    index: IndexSets = field(repr=False)

    @property
    def x_min(self):
        return self.x_hat0 - self.half_width_x

    @property
    def x_max(self):
        return self.x_hat0 + self.half_width_x

    @property
    def y_min(self):
        return self.y_hat0 - self.half_width_y

    @property
    def y_max(self):
        return self.y_hat0 + self.half_width_y

    @property
    def P_x(self):
        return 2.0 * self.half_width_x

    @property
    def P_y(self):
        return 2.0 * self.half_width_y

    @property
    def x_dagger_min(self):
        return self.x_min - self.P_x / 2

    @property
    def x_dagger_max(self):
        return self.x_max + self.P_x / 2

    @property
    def y_dagger_min(self):
        return self.y_min - self.P_y / 2

    @property
    def y_dagger_max(self):
        return self.y_max + self.P_y / 2

    # double-dagger bounds are displacements, so relative to the anchor
    @property
    def x_ddagger_min(self):
        return -1.5 * self.P_x

    @property
    def x_ddagger_max(self):
        return 1.5 * self.P_x

    @property
    def y_ddagger_min(self):
        return -1.5 * self.P_y

    @property
    def y_ddagger_max(self):
        return 1.5 * self.P_y

    @property
    def dx(self):
        return self.P_x / self.N

    @property
    def dy(self):
        return self.P_y / self.J

    @property
    def dtau(self):
        return self.T / self.M

    @property
    def x_nodes(self) -> np.ndarray:
        """Coordinates of the dagger x-nodes, ``n = -N..N``."""
        return self.x_hat0 + np.arange(-self.N, self.N + 1) * self.dx

    @property
    def y_nodes(self) -> np.ndarray:
        return self.y_hat0 + np.arange(-self.J, self.J + 1) * self.dy

    @property
    def interior(self) -> tuple[slice, slice]:
        """Slices selecting interior nodes from a dagger-node array."""
        N, J = self.N, self.J
        return slice(N // 2 + 1, 3 * N // 2), slice(J // 2 + 1, 3 * J // 2)

    @property
    def interior_shape(self):
        return self.N - 1, self.J - 1

    @property
    def dagger_shape(self):
        return 2 * self.N + 1, 2 * self.J + 1

    @property
    def ddagger_shape(self):
        return 3 * self.N - 1, 3 * self.J - 1

    @property
    def x_disp(self) -> np.ndarray:
        """Displacements ``p * dx`` for ``p`` in the double-dagger set."""
        h = 3 * self.N // 2 - 1
        return np.arange(-h, h + 1) * self.dx

    @property
    def y_disp(self) -> np.ndarray:
        h = 3 * self.J // 2 - 1
        return np.arange(-h, h + 1) * self.dy

    def interior_mask(self) -> np.ndarray:
        mask = np.zeros(self.dagger_shape, dtype=bool)
        mask[self.interior] = True
        return mask


def build_grid(params, spot, half_width, N: int, J: int, M: int) -> GridSpec:
    """Build the nested grid centred on ``(ln X0, ln Y0)``.

    ``params`` supplies the maturity (``ModelParams``, ``DerivedModel`` or a
    bare float ``T``).
    """
    if isinstance(params, DerivedModel):
        T = params.params.T
    elif isinstance(params, ModelParams):
        T = params.T
    else:
        T = float(params)
    X0, Y0 = spot
    wx, wy = half_width
    if not (X0 > 0 and Y0 > 0):
        raise ValueError(f"spot prices must be > 0, got {spot!r}")
    if not (wx > 0 and wy > 0):
        raise ValueError(f"half widths must be > 0, got {half_width!r}")
    for name, n in (("N", N), ("J", J)):
        if int(n) != n or n < 4 or n % 2:
            raise ValueError(f"{name} must be an even integer >= 4, got {n!r}")
    if int(M) != M or M < 1:
        raise ValueError(f"M must be an integer >= 1, got {M!r}")
    if not T > 0:
        raise ValueError(f"T must be > 0, got {T!r}")
    N, J, M = int(N), int(J), int(M)
    index = IndexSets(
        interior_x=range(-N // 2 + 1, N // 2),
        interior_y=range(-J // 2 + 1, J // 2),
        dagger_x=range(-N, N + 1),
        dagger_y=range(-J, J + 1),
        ddagger_x=range(-3 * N // 2 + 1, 3 * N // 2),
        ddagger_y=range(-3 * J // 2 + 1, 3 * J // 2),
    )
    return GridSpec(N, J, M, float(T), math.log(X0), math.log(Y0),
                    float(wx), float(wy), index)


def trapezoid_weights(grid: GridSpec) -> tuple[np.ndarray, np.ndarray]:
    """Separable composite-trapezoid weights over the dagger box.

    Returns ``(phi_x, phi_y)``; the 2-D weight is ``phi_x[:, None] * phi_y``.
    """
    phi_x = np.ones(2 * grid.N + 1)
    phi_x[[0, -1]] = 0.5
    phi_y = np.ones(2 * grid.J + 1)
    phi_y[[0, -1]] = 0.5
    return _freeze(phi_x), _freeze(phi_y)

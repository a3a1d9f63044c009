"""Timestepping driver: convolution, early-exercise max, boundary refresh."""
from __future__ import annotations

import enum
import logging
import math
import time
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import convolve as cv
from .kernel import KernelArray, build_kernel
from .model import GridSpec, Payoff, trapezoid_weights, validate

log = logging.getLogger(__name__)


class Mode(enum.Enum):
    AMERICAN = "american"
    EUROPEAN = "european"


class PricingError(RuntimeError):
    pass


@dataclass(frozen=True)
class ValueSurface:
    """Values over all dagger nodes at time-to-maturity ``m * dtau``."""

    values: np.ndarray
    m: int
    grid: GridSpec = field(repr=False)

    @property
    def tau(self) -> float:
        return self.m * self.grid.dtau

    @property
    def interior(self) -> np.ndarray:
        return self.values[self.grid.interior]


@dataclass
class PriceResult:
    price: float
    surface: ValueSurface
    exercise_mask: np.ndarray | None
    K: int
    mode: Mode
    timings: dict
    snapshots: dict = field(default_factory=dict)


def init_surface(payoff: Payoff, grid: GridSpec) -> ValueSurface:
    v = payoff(grid.x_nodes[:, None], grid.y_nodes[None, :])
    return ValueSurface(np.array(v, dtype=float), 0, grid)


def apply_boundary(surface: ValueSurface, payoff: Payoff, tau: float, r: float,
                   payoff_values: np.ndarray | None = None) -> ValueSurface:
    """Overwrite every non-interior dagger node with ``payoff * exp(-r tau)``."""
    grid = surface.grid
    if not -1e-12 <= tau <= grid.T * (1 + 1e-12):
        raise ValueError(f"tau={tau} outside [0, T={grid.T}]")
    if payoff_values is None:
        payoff_values = init_surface(payoff, grid).values
    out = payoff_values * math.exp(-r * tau)
    ix, iy = grid.interior
    out[ix, iy] = surface.values[ix, iy]
    return replace(surface, values=out)


class _Stepper:
    """Holds the per-run constants shared by every timestep."""

    def __init__(self, model, payoff, grid, kernel, embed, convolver=None):
        self.model = model
        self.payoff = payoff
        self.grid = grid
        self.kernel = kernel
        self.phi = trapezoid_weights(grid)
        self.payoff_values = init_surface(payoff, grid).values
        if convolver is None:
            spec = cv.plan(kernel, grid, embed)
            self.convolve = lambda v: cv.convolve_step(spec, v, self.phi)
        else:
            self.convolve = lambda v: convolver(kernel, v, self.phi)

    def step(self, surface: ValueSurface, american: bool) -> ValueSurface:
        grid = self.grid
        u = self.convolve(surface.values)
        if not np.all(np.isfinite(u)):
            raise PricingError(f"non-finite continuation values at step {surface.m + 1}")
        ix, iy = grid.interior
        if american:
            u = np.maximum(u, self.payoff_values[ix, iy])
        m = surface.m + 1
        out = self.payoff_values * math.exp(-self.model.params.r * m * grid.dtau)
        out[ix, iy] = u
        return ValueSurface(out, m, grid)


def step_american(surface: ValueSurface, stepper: _Stepper) -> ValueSurface:
    """One timestep with the early-exercise max; boundary refreshed for m+1."""
    return stepper.step(surface, american=True)


def step_european(surface: ValueSurface, stepper: _Stepper) -> ValueSurface:
    return stepper.step(surface, american=False)


def make_stepper(params, payoff: Payoff, grid: GridSpec, *, epsilon=None,
                 embed=cv.EmbedMode.FAST, kernel: KernelArray | None = None,
                 convolver=None) -> _Stepper:
    model = validate(params)
    if kernel is None:
        kernel = build_kernel(model, grid, epsilon)
    return _Stepper(model, payoff, grid, kernel, embed, convolver)


def price(params, payoff: Payoff, grid: GridSpec, *, mode=Mode.AMERICAN,
          epsilon: float | None = None, embed=cv.EmbedMode.FAST,
          kernel: KernelArray | None = None, snapshot_steps=(),
          convolver=None, spot=None) -> PriceResult:
    """Price on ``grid``; the spot defaults to the grid anchor.

    ``snapshot_steps`` lists timestep indices ``m`` whose surfaces are kept
    in ``PriceResult.snapshots``.  ``convolver`` replaces the transform path
    with a direct-summation callable ``f(kernel, values, phi)``.
    """
    mode = Mode(mode)
    t0 = time.perf_counter()
    stepper = make_stepper(params, payoff, grid, epsilon=epsilon, embed=embed,
                           kernel=kernel, convolver=convolver)
    t1 = time.perf_counter()
    american = mode is Mode.AMERICAN
    surface = init_surface(payoff, grid)
    snapshots = {}
    keep = set(snapshot_steps)
    if 0 in keep:
        snapshots[0] = surface
    for _ in range(grid.M):
        try:
            surface = stepper.step(surface, american)
        except (FloatingPointError, ValueError) as exc:
            raise PricingError(f"step {surface.m + 1} failed: {exc}") from exc
        if surface.m in keep:
            snapshots[surface.m] = surface
    t2 = time.perf_counter()
    if spot is None:
        value = float(surface.values[grid.N, grid.J])
    else:
        value = value_at(surface, *spot)
    mask = exercise_region(surface, payoff) if american else None
    log.debug("priced N=%d J=%d M=%d K=%d in %.2fs", grid.N, grid.J, grid.M,
              stepper.kernel.K, t2 - t0)
    return PriceResult(value, surface, mask, stepper.kernel.K, mode,
                       {"kernel": t1 - t0, "steps": t2 - t1, "total": t2 - t0},
                       snapshots)


def exercise_region(surface: ValueSurface, payoff: Payoff, tol: float = 1e-8) -> np.ndarray:
    """Boolean mask over interior nodes where exercising is optimal.

    Before maturity a node counts only if its payoff is positive: far out of
    the money both the value and the payoff fall below ``tol``.
    """
    grid = surface.grid
    ix, iy = grid.interior
    pv = payoff(grid.x_nodes[ix, None], grid.y_nodes[None, iy])
    hit = surface.values[ix, iy] - pv <= tol * max(1.0, payoff.strike)
    return hit if surface.m == 0 else hit & (pv > 0)


def value_at(surface: ValueSurface, X0: float, Y0: float) -> float:
    """Surface value at spot ``(X0, Y0)``; bilinear between nodes."""
    grid = surface.grid
    x, y = math.log(X0), math.log(Y0)
    tol = 1e-12
    if not (grid.x_min - tol <= x <= grid.x_max + tol and grid.y_min - tol <= y <= grid.y_max + tol):
        raise ValueError(f"spot ({X0}, {Y0}) lies outside the interior domain")
    fx = (x - grid.x_hat0) / grid.dx + grid.N
    fy = (y - grid.y_hat0) / grid.dy + grid.J
    i0, j0 = math.floor(fx + 1e-9), math.floor(fy + 1e-9)
    tx, ty = fx - i0, fy - j0
    if abs(tx) < 1e-9 and abs(ty) < 1e-9:
        return float(surface.values[i0, j0])
    v = surface.values
    i1, j1 = min(i0 + 1, v.shape[0] - 1), min(j0 + 1, v.shape[1] - 1)
    return float((1 - tx) * (1 - ty) * v[i0, j0] + tx * (1 - ty) * v[i1, j0]
                 + (1 - tx) * ty * v[i0, j1] + tx * ty * v[i1, j1])


def export_surface_csv(surface: ValueSurface, path, interior_only: bool = True) -> None:
    """CSV with columns ``x,y,X,Y,value`` (log and price coordinates)."""
    grid = surface.grid
    if interior_only:
        ix, iy = grid.interior
        xs, ys, vals = grid.x_nodes[ix], grid.y_nodes[iy], surface.values[ix, iy]
    else:
        xs, ys, vals = grid.x_nodes, grid.y_nodes, surface.values
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    table = np.column_stack([X.ravel(), Y.ravel(), np.exp(X.ravel()), np.exp(Y.ravel()), vals.ravel()])
    np.savetxt(path, table, delimiter=",", header="x,y,X,Y,value", comments="", fmt="%.12g")


def export_mask_csv(mask: np.ndarray, grid: GridSpec, path) -> None:
    ix, iy = grid.interior
    X, Y = np.meshgrid(grid.x_nodes[ix], grid.y_nodes[iy], indexing="ij")
    table = np.column_stack([X.ravel(), Y.ravel(), np.exp(X.ravel()), np.exp(Y.ravel()),
                             mask.ravel().astype(int)])
    np.savetxt(path, table, delimiter=",", header="x,y,X,Y,exercise", comments="",
               fmt=["%.12g"] * 4 + ["%d"])


def export_mask_pgm(mask: np.ndarray, path) -> None:
    """Binary PGM (P5): exercised nodes black, others white, y increasing up."""
    img = np.where(mask, 0, 255).astype(np.uint8).T[::-1]
    h, w = img.shape
    with Path(path).open("wb") as fh:
        fh.write(f"P5\n{w} {h}\n255\n".encode("ascii"))
        fh.write(img.tobytes())

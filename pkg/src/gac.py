"""Geodesic active contour baseline: speed map, level-set evolution and parameter fitting

Sign convention: Φ < 0 inside, outward normal n = ∇Φ/|∇Φ|, curvature k = div n.
The front moves with normal speed g(1 - εk) - α∇g·n, i.e.

    ∂Φ/∂t = -g(1 - εk)|∇Φ| + α∇g·∇Φ

Propagation inflates the contour, curvature regularizes it and advection pulls
it onto edges (minima of g).
"""

import itertools
import math
from collections.abc import Callable, Sequence
from concurrent.futures import ThreadPoolExecutor

import numpy as np
from numba import njit
from scipy import ndimage
from tqdm import tqdm

from .errors import DomainError, NumericFaultError, ShapeError, SpecValidationError
from .evalstat import dice
from .models.gac import LevelSetField, LevelSetGrid, LevelSetParams, SearchStrategy
from .models.phantom import GrayImage, PairedSample, SegMask
from .phantom import lesion_centroid

GRAD_EPS = 1e-8
DT_SAFETY = 0.9

type Candidate = tuple[int, float, float, float]


def speed_map(img: GrayImage, sigma: float) -> np.ndarray:
    """Edge-stopping function g = 1 / (1 + |∇G_σ * f|) with f rescaled to [0, 1]"""
    if sigma <= 0:
        raise DomainError(f"sigma must be positive, got {sigma}")
    f = img.values
    lo, hi = float(f.min()), float(f.max())
    f = (f - lo) / (hi - lo) if hi > lo else np.zeros_like(f)
    grad = ndimage.gaussian_gradient_magnitude(f, sigma=sigma, mode="nearest")
    return 1.0 / (1.0 + grad)


def init_phi(shape: tuple[int, int], center: tuple[float, float], radius: float) -> LevelSetField:
    """Exact signed distance to a circle, negative inside"""
    if radius <= 0:
        raise DomainError(f"radius must be positive, got {radius}")
    row, col = center
    if not (0 <= row <= shape[0] - 1 and 0 <= col <= shape[1] - 1):
        raise DomainError(f"center {center} outside grid {shape}")
    rr, cc = np.indices(shape, dtype=np.float64)
    return LevelSetField(values=np.hypot(rr - row, cc - col) - radius)


def _differences(phi: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """One-sided differences (minus/plus along rows, minus/plus along columns), Neumann borders"""
    p = np.pad(phi, 1, mode="edge")
    c = p[1:-1, 1:-1]
    return c - p[:-2, 1:-1], p[2:, 1:-1] - c, c - p[1:-1, :-2], p[1:-1, 2:] - c


def _curvature_term(phi: np.ndarray) -> np.ndarray:
    """k·|∇Φ| from central differences; zero where |∇Φ| vanishes"""
    p = np.pad(phi, 1, mode="edge")
    c = p[1:-1, 1:-1]
    py = (p[2:, 1:-1] - p[:-2, 1:-1]) / 2
    px = (p[1:-1, 2:] - p[1:-1, :-2]) / 2
    pyy = p[2:, 1:-1] - 2 * c + p[:-2, 1:-1]
    pxx = p[1:-1, 2:] - 2 * c + p[1:-1, :-2]
    pxy = (p[2:, 2:] - p[2:, :-2] - p[:-2, 2:] + p[:-2, :-2]) / 4
    norm2 = px**2 + py**2
    out = np.zeros_like(phi)
    ok = np.sqrt(norm2) >= GRAD_EPS
    out[ok] = (pxx * py**2 - 2 * px * py * pxy + pyy * px**2)[ok] / norm2[ok]
    return out


def _speed_gradient(g: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    gy, gx = np.gradient(g)
    return gy, gx


def cfl_bound(g: np.ndarray, params: LevelSetParams) -> float:
    """Largest stable explicit step for this speed map and parameter set"""
    gy, gx = _speed_gradient(g)
    rate = float(g.max()) * (1 + 2 * params.epsilon) + params.alpha * float(np.hypot(gx, gy).max())
    return math.inf if rate == 0 else 0.5 / rate


def resolve_dt(g: np.ndarray, params: LevelSetParams) -> float:
    """Explicit dt checked against the bound, or 0.9 of the bound sized for cfl_epsilon/cfl_alpha"""
    bound = cfl_bound(g, params)
    if params.dt is None:
        sizing = params.model_copy(
            update={
                "epsilon": max(params.epsilon, params.cfl_epsilon),
                "alpha": max(params.alpha, params.cfl_alpha),
            }
        )
        auto = cfl_bound(g, sizing)
        return DT_SAFETY * auto if math.isfinite(auto) else 1.0
    if params.dt > bound * (1 + 1e-12):
        raise SpecValidationError("dt", f"{params.dt} exceeds the CFL bound {bound:.6g}")
    return params.dt


def evolve_step(phi: np.ndarray, g: np.ndarray, gy: np.ndarray, gx: np.ndarray,
                params: LevelSetParams, dt: float) -> np.ndarray:
    dym, dyp, dxm, dxp = _differences(phi)
    # Godunov upwinding for outward motion with non-negative speed g
    grad_plus = np.sqrt(
        np.maximum(dym, 0) ** 2 + np.minimum(dyp, 0) ** 2
        + np.maximum(dxm, 0) ** 2 + np.minimum(dxp, 0) ** 2
    )
    propagation = -g * grad_plus
    curvature = params.epsilon * g * _curvature_term(phi) if params.epsilon else 0.0
    if params.alpha:
        # advection velocity is -α∇g: take the difference on the side it comes from
        phi_y = np.where(gy < 0, dym, dyp)
        phi_x = np.where(gx < 0, dxm, dxp)
        advection = params.alpha * (gy * phi_y + gx * phi_x)
    else:
        advection = 0.0
    return phi + dt * (propagation + curvature + advection)


def evolve(phi: LevelSetField, g: np.ndarray, params: LevelSetParams) -> LevelSetField:
    """Explicit time stepping with periodic reinitialization to a signed distance"""
    if phi.shape != g.shape:
        raise ShapeError(f"level set {phi.shape} and speed map {g.shape} differ")
    dt = resolve_dt(g, params)
    gy, gx = _speed_gradient(g)
    if not g.any():
        return LevelSetField(values=phi.values.copy())

    values = phi.values.copy()
    for step in range(1, params.steps + 1):
        values = evolve_step(values, g, gy, gx, params, dt)
        if step % params.reinit_every == 0 and step < params.steps:
            values = reinitialize(values)
    if not np.all(np.isfinite(values)):
        raise NumericFaultError(f"level set became non-finite after {params.steps} steps")
    return LevelSetField(values=values)


@njit(cache=True, nogil=True)
def _interface_distance(phi: np.ndarray) -> np.ndarray:
    ny, nx = phi.shape
    d = np.full((ny, nx), 1e10)
    for i in range(ny):
        for j in range(nx):
            v = phi[i, j]
            if v == 0.0:
                d[i, j] = 0.0
                continue
            gy = 0.0
            gx = 0.0
            if i > 0 and phi[i - 1, j] * v < 0:
                gy = max(gy, abs(phi[i - 1, j] - v))
            if i < ny - 1 and phi[i + 1, j] * v < 0:
                gy = max(gy, abs(phi[i + 1, j] - v))
            if j > 0 and phi[i, j - 1] * v < 0:
                gx = max(gx, abs(phi[i, j - 1] - v))
            if j < nx - 1 and phi[i, j + 1] * v < 0:
                gx = max(gx, abs(phi[i, j + 1] - v))
            if gy > 0.0 or gx > 0.0:
                d[i, j] = abs(v) / math.sqrt(gy * gy + gx * gx)
    return d


@njit(cache=True, nogil=True)
def _sweep(d: np.ndarray, frozen: np.ndarray, rows: np.ndarray, cols: np.ndarray) -> None:
    ny, nx = d.shape
    for i in rows:
        for j in cols:
            if frozen[i, j]:
                continue
            a = min(d[i - 1, j] if i > 0 else 1e10, d[i + 1, j] if i < ny - 1 else 1e10)
            b = min(d[i, j - 1] if j > 0 else 1e10, d[i, j + 1] if j < nx - 1 else 1e10)
            if abs(a - b) >= 1.0:
                candidate = min(a, b) + 1.0
            else:
                candidate = 0.5 * (a + b + math.sqrt(2.0 - (a - b) ** 2))
            if candidate < d[i, j]:
                d[i, j] = candidate


@njit(cache=True, nogil=True)
def _fast_sweeping(phi: np.ndarray, passes: int) -> np.ndarray:
    d = _interface_distance(phi)
    frozen = d < 1e10
    ny, nx = phi.shape
    down = np.arange(ny)
    up = down[::-1]
    right = np.arange(nx)
    left = right[::-1]
    for _ in range(passes):
        _sweep(d, frozen, down, right)
        _sweep(d, frozen, up, right)
        _sweep(d, frozen, up, left)
        _sweep(d, frozen, down, left)
    return np.sign(phi) * d


def reinitialize(phi: np.ndarray, passes: int = 2) -> np.ndarray:
    """Signed distance with the same zero level set, by fast sweeping"""
    if not ((phi < 0).any() and (phi > 0).any()):
        return phi.copy()
    return _fast_sweeping(np.ascontiguousarray(phi, dtype=np.float64), passes)


def phi_to_mask(phi: LevelSetField) -> SegMask:
    return SegMask.from_bool(phi.values < 0)


def default_center(shape: tuple[int, int]) -> tuple[int, int]:
    return shape[0] // 2, shape[1] // 2


def segment_levelset(
    img: GrayImage, params: LevelSetParams, center: tuple[float, float] | None = None
) -> SegMask:
    """Speed map, circular initialization at the ROI center, evolution, zero-level mask"""
    g = speed_map(img, params.sigma)
    phi0 = init_phi(img.shape, center or default_center(img.shape), params.init_radius)
    return phi_to_mask(evolve(phi0, g, params))


def _candidate_params(candidate: Candidate, grid: LevelSetGrid) -> LevelSetParams:
    steps, epsilon, alpha, sigma = candidate
    return LevelSetParams(
        steps=steps,
        epsilon=epsilon,
        alpha=alpha,
        sigma=sigma,
        dt=grid.dt,
        init_radius=grid.init_radius,
        cfl_epsilon=max(grid.epsilon),
        cfl_alpha=max(grid.alpha),
    )


def _rank(candidate: Candidate, score: float) -> tuple:
    # higher score first, then smallest steps, epsilon, alpha, sigma
    return (-score, *candidate)


class _Scorer:
    """Memoized mean Dice of a candidate over the fitting samples"""

    def __init__(self, samples: Sequence[PairedSample], grid: LevelSetGrid, jobs: int):
        self.samples = samples
        self.grid = grid
        self.jobs = max(1, jobs)
        self.centers = [lesion_centroid(s.mask) for s in samples]
        self.cache: dict[Candidate, float] = {}

    def _evaluate(self, candidate: Candidate) -> float:
        params = _candidate_params(candidate, self.grid)
        scores = [
            dice(segment_levelset(s.image, params, center).values >= 0.5, s.mask.values >= 0.5)
            for s, center in zip(self.samples, self.centers, strict=True)
        ]
        return float(np.mean(scores))

    def score_all(self, candidates: list[Candidate], progress: Callable | None = None) -> dict[Candidate, float]:
        todo = [c for c in dict.fromkeys(candidates) if c not in self.cache]
        if self.jobs > 1 and len(todo) > 1:
            with ThreadPoolExecutor(max_workers=self.jobs) as pool:
                results = pool.map(self._evaluate, todo)
                for candidate, score in zip(todo, results, strict=True):
                    self.cache[candidate] = score
                    if progress:
                        progress()
        else:
            for candidate in todo:
                self.cache[candidate] = self._evaluate(candidate)
                if progress:
                    progress()
        return {c: self.cache[c] for c in candidates}


def _best(scores: dict[Candidate, float]) -> Candidate:
    return min(scores, key=lambda c: _rank(c, scores[c]))


def fit_params(
    train: Sequence[PairedSample],
    grid: LevelSetGrid | None = None,
    strategy: SearchStrategy = SearchStrategy.COORDINATE,
    max_rounds: int = 4,
    jobs: int = 1,
) -> LevelSetParams:
    """Pick the grid point maximizing mean Dice on the training samples

    Coordinate descent sweeps the axes in tie-break order until a full round
    changes nothing. It runs once from the smallest value on every axis and once
    from the axis medians, and keeps the better end point. Every candidate shares
    the dt sized for the grid's largest epsilon and alpha, so a step count means
    the same evolution time across the grid.
    """
    if not train:
        raise ValueError("fit_params needs at least one training sample")
    grid = grid or LevelSetGrid()
    axes = grid.axes()
    if any(not values for values in axes.values()):
        raise SpecValidationError("grid", "search space is empty")
    scorer = _Scorer(train, grid, jobs)

    if strategy == SearchStrategy.EXHAUSTIVE:
        candidates = list(itertools.product(*axes.values()))
        with tqdm(total=len(candidates), desc="level-set grid", leave=False) as bar:
            best = _best(scorer.score_all(candidates, bar.update))
        return _candidate_params(best, grid)

    starts = [
        tuple(values[0] for values in axes.values()),
        tuple(values[len(values) // 2] for values in axes.values()),
    ]
    finals = [_coordinate_descent(scorer, axes, start, max_rounds) for start in dict.fromkeys(starts)]
    return _candidate_params(_best(scorer.score_all(finals)), grid)


def _coordinate_descent(
    scorer: _Scorer, axes: dict[str, list], start: Candidate, max_rounds: int
) -> Candidate:
    current = start
    for _ in range(max_rounds):
        previous = current
        for index, name in enumerate(axes):
            candidates = [(*current[:index], v, *current[index + 1 :]) for v in axes[name]]
            current = _best(scorer.score_all(candidates))
        if current == previous:
            break
    return current

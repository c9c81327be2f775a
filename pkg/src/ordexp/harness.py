"""Experiment drivers: empirical order studies, bound sweeps, norm blow-up demo."""
from __future__ import annotations

import io
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from scipy import stats

from .bounds import _qk, single_step_bound
from .evaluator import apply_schedule, kappa_from_catalog, shifted_terms
from .matrix_core import EPS, SIGMA_Y, SIGMA_Z, identity, matrix_to_json, spectral_norm
from .operators import TermSet, build_system, estimate_lambda, is_contractive
from .oracle import DEFAULT_TOL, ordered_exp, piecewise_constant_exact
from .schedule import lts_schedule

log = logging.getLogger(__name__)

FIG1_GRID = tuple(np.logspace(-2.5, -0.5, 12))


def log_grid(lo_exp: float, hi_exp: float, n: int) -> tuple[float, ...]:
    """``n`` points from ``10**lo_exp`` to ``10**hi_exp``."""
    return tuple(float(x) for x in np.logspace(lo_exp, hi_exp, n))


def noise_floor(dim: int) -> float:
    return 1e3 * EPS * dim


def fit_loglog(points: Iterable[tuple[float, float]]) -> tuple[float, float]:
    """Least-squares slope of ``log y`` against ``log x`` and its standard error."""
    pts = list(points)
    if len(pts) < 3:
        raise ValueError("need at least 3 points to fit a slope")
    x = np.array([p[0] for p in pts], dtype=float)
    y = np.array([p[1] for p in pts], dtype=float)
    if np.any(x <= 0) or np.any(y <= 0):
        raise ValueError("log-log fit needs positive data")
    lx = np.log(x)
    if np.ptp(lx) < 1e-12:
        raise ValueError("degenerate x range")
    res = stats.linregress(lx, np.log(y))
    return float(res.slope), float(res.stderr)


def fit_slope(points: Iterable[tuple[float, float]]) -> float:
    return fit_loglog(points)[0]


@dataclass(frozen=True)
class Sample:
    dt: float
    error: float
    zeta: float
    excluded: bool


@dataclass(frozen=True)
class ConvergenceReport:
    system: str
    k: int
    mu: float
    samples: tuple[Sample, ...]
    fitted_slope: float
    slope_stderr: float
    fit_range: tuple[float, float]
    oracle_tol: float
    noise_floor: float

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("dt,error,zeta,excluded\n")
        for s in self.samples:
            buf.write(f"{s.dt:.17g},{s.error:.17g},{s.zeta:.17g},{int(s.excluded)}\n")
        buf.write(f"# slope={self.fitted_slope:.17g}\n")
        buf.write(f"# k={self.k}\n")
        buf.write(f"# system={self.system}\n")
        buf.write(f"# mu={self.mu:.17g}\n")
        buf.write(f"# oracle_tol={self.oracle_tol:.3g}\n")
        return buf.getvalue()

    def to_json(self) -> dict:
        return {
            "system": self.system,
            "k": self.k,
            "mu": self.mu,
            "samples": [s.__dict__ for s in self.samples],
            "fitted_slope": self.fitted_slope,
            "slope_stderr": self.slope_stderr,
            "fit_range": list(self.fit_range),
            "oracle_tol": self.oracle_tol,
            "noise_floor": self.noise_floor,
        }


def _resolve(system, interval, **kw) -> tuple[TermSet, str]:
    if isinstance(system, TermSet):
        return system, system.name or "custom"
    return build_system(system, interval=interval, **kw), system


def decomposition_error(ts: TermSet, k: int, mu: float, dt: float,
                        oracle_tol: float = DEFAULT_TOL) -> float:
    """``||U_k(mu+dt, mu) - U(mu+dt, mu)||`` against the reference integrator."""
    approx = apply_schedule(lts_schedule(ts.m, k), ts, mu, dt)
    return spectral_norm(approx - ordered_exp(ts, mu, dt, oracle_tol).U)


def order_study(system, k: int, mu: float = 0.0, dt_grid: Sequence[float] = FIG1_GRID,
                oracle_tol: float = DEFAULT_TOL, *, floor: float | None = None,
                workers: int = 1, **system_kw) -> ConvergenceReport:
    """Measure the single-step error of ``U_k`` over a grid of step sizes.

    Samples whose error does not clear the rounding noise floor are kept in
    the report but flagged and left out of the slope fit.
    """
    grid = sorted(float(d) for d in dt_grid)
    if len(grid) < 8:
        raise ValueError("order_study needs at least 8 step sizes")
    if grid[0] <= 0:
        raise ValueError("step sizes must be positive")
    ts, name = _resolve(system, (mu, mu + grid[-1]), **system_kw)
    floor = noise_floor(ts.dim) if floor is None else floor

    def one(dt):
        return decomposition_error(ts, k, mu, dt, oracle_tol)

    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            errors = list(pool.map(one, grid))
    else:
        errors = [one(dt) for dt in grid]

    samples = tuple(Sample(dt, e, e / dt ** (2 * k + 1), not e > floor) for dt, e in zip(grid, errors))
    kept = [(s.dt, s.error) for s in samples if not s.excluded]
    if not kept:
        raise ValueError("every sample is below the noise floor; move dt_grid to larger steps")
    if len(kept) < 3:
        raise ValueError(f"only {len(kept)} samples clear the noise floor; need 3 (raise dt_grid)")
    if min(e for _, e in kept) < 100 * oracle_tol:
        log.warning("smallest fitted error %.3g is within 100x of oracle_tol %.3g",
                    min(e for _, e in kept), oracle_tol)
    slope, stderr = fit_loglog(kept)
    return ConvergenceReport(name, k, mu, samples, slope, stderr,
                             (kept[0][0], kept[-1][0]), oracle_tol, floor)


@dataclass(frozen=True)
class BoundRow:
    seed: int
    dt: float
    Lambda: float
    error: float
    bound: float
    valid: bool
    margin: float
    excluded: bool


@dataclass(frozen=True)
class BoundSweep:
    system: str
    k: int
    mu: float
    rows: tuple[BoundRow, ...]

    @property
    def violations(self) -> list[BoundRow]:
        return [r for r in self.rows if r.valid and not r.excluded and r.error > r.bound]

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("seed,dt,Lambda,error,bound,valid,margin,excluded\n")
        for r in self.rows:
            buf.write(f"{r.seed},{r.dt:.17g},{r.Lambda:.17g},{r.error:.17g},{r.bound:.17g},"
                      f"{int(r.valid)},{r.margin:.17g},{int(r.excluded)}\n")
        buf.write(f"# k={self.k}\n# system={self.system}\n# violations={len(self.violations)}\n")
        return buf.getvalue()

    def to_json(self) -> dict:
        return {"system": self.system, "k": self.k, "mu": self.mu,
                "rows": [r.__dict__ for r in self.rows], "violations": len(self.violations)}


def bound_sweep(system, k: int, mu: float, dt_grid: Sequence[float], seeds: Sequence[int] = (0,),
                oracle_tol: float = DEFAULT_TOL, *, allow_noncontractive: bool = False,
                kappa: str | None = None, lambda_grid: int = 257, **system_kw) -> BoundSweep:
    """Compare measured single-step errors with the closed-form bound.

    The bound presumes a contractive evolution. A non-contractive system is
    rejected unless ``allow_noncontractive`` is set, in which case the terms are
    shifted by the catalogued ``kappa`` and the shifted problem is measured.
    """
    grid = sorted(float(d) for d in dt_grid)
    rows = []
    name = system if isinstance(system, str) else (system.name or "custom")
    for seed in seeds:
        if isinstance(system, str):
            ts = build_system(system, interval=(mu, mu + grid[-1]), seed=seed, **system_kw)
        else:
            ts = system
        if not is_contractive(ts, (mu, mu + grid[-1])):
            if not allow_noncontractive:
                raise ValueError(f"{name} (seed {seed}) is not contractive; pass "
                                 "allow_noncontractive with a kappa shift")
            if kappa is None:
                raise ValueError("a kappa catalog id is required for non-contractive systems")
            ts = shifted_terms(ts, kappa_from_catalog(kappa))
        for dt in grid:
            lam = estimate_lambda(ts, (mu, mu + dt), 2 * k, grid_points=lambda_grid).Lambda
            err = decomposition_error(ts, k, mu, dt, oracle_tol)
            bound, valid = single_step_bound(k, lam, dt)
            excluded = bound == 0.0 and err == 0.0
            margin = math.nan if excluded else (math.inf if err == 0 else bound / err)
            rows.append(BoundRow(seed, dt, lam, err, bound, valid, margin, excluded))
    return BoundSweep(name, k, mu, tuple(rows))


def validity_threshold(k: int, Lambda: float) -> float:
    """Largest ``dt`` for which the single-step bound's hypothesis holds."""
    return 0.5 / (2 * math.sqrt(2) * 5 ** (k - 1) * _qk(k) * Lambda)


@dataclass(frozen=True)
class SignFlipReport:
    delta: float
    dt: float
    matrix: np.ndarray
    expected: np.ndarray
    max_entry_error: float
    matches: bool
    error_norm: float
    error_norm_doubled: float
    growth_ratio: float

    def to_json(self) -> dict:
        return {
            "delta": self.delta, "dt": self.dt,
            "matrix": matrix_to_json(self.matrix), "expected": matrix_to_json(self.expected),
            "max_entry_error": self.max_entry_error, "matches": self.matches,
            "error_norm": self.error_norm, "error_norm_doubled": self.error_norm_doubled,
            "growth_ratio": self.growth_ratio,
        }


def _flip_with_kick(delta: float, dt: float) -> np.ndarray:
    kick = 1j * delta * SIGMA_Y  # exp(kick) = exp(i delta sigma_y)
    return piecewise_constant_exact([(SIGMA_Z, dt / 2), (kick, 1.0), (-SIGMA_Z, dt / 2)])


def appendix_b_demo(delta: float, dt: float, tol: float = 1e-12) -> SignFlipReport:
    """Sign-flipping ``sigma_z`` evolution with a small rotation inserted halfway.

    The exact evolution is the identity, yet the perturbed product has an
    off-diagonal entry ``-e^{dt} sin(delta)``: the error grows like ``e^{dt}``.
    """
    mat = _flip_with_kick(delta, dt)
    c, s = math.cos(delta), math.sin(delta)
    expected = np.array([[c, math.exp(-dt) * s], [-math.exp(dt) * s, c]], dtype=np.complex128)
    max_err = float(np.max(np.abs(mat - expected)))
    err = spectral_norm(mat - identity(2))
    err2 = spectral_norm(_flip_with_kick(delta, 2 * dt) - identity(2))
    return SignFlipReport(delta, dt, mat, expected, max_err, max_err <= tol, err, err2,
                          err2 / err if err > 0 else math.nan)

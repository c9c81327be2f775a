"""High-accuracy reference values for the ordered exponential ``U(mu + dt, mu)``.

``ordered_exp`` integrates ``dU/du = H(u) U`` with the Dormand-Prince 8(5,3)
embedded pair under a PI step-size controller. The tolerance is an error per
unit interval, so the accumulated local-error estimate stays below ``tol``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np
from scipy.integrate._ivp import dop853_coefficients as _dop

from .matrix_core import EPS, as_matrix, identity, mat_exp, spectral_norm
from .operators import SmoothnessError, TermSet

_NS = _dop.N_STAGES
_A = _dop.A[:_NS, :_NS]
_B = _dop.B
_C = _dop.C[:_NS]
_E3 = _dop.E3
_E5 = _dop.E5

DEFAULT_TOL = 1e-13
MIN_STEP_FRACTION = 1e-12


class StepSizeUnderflow(RuntimeError):
    def __init__(self, at: float, step: float):
        super().__init__(f"step size underflow at lambda={at!r} (step {step:.3g})")
        self.at = at
        self.step = step


@dataclass(frozen=True)
class OracleResult:
    U: np.ndarray
    est_error: float
    steps_taken: int
    rejected: int = 0


def _error_norm(K: np.ndarray, h: float) -> float:
    e5 = float(np.linalg.norm(K.T @ _E5))
    e3 = float(np.linalg.norm(K.T @ _E3))
    if e5 == 0.0 and e3 == 0.0:
        return 0.0
    return abs(h) * e5**2 / math.sqrt(e5**2 + 0.01 * e3**2)


def ordered_exp(ts: TermSet, mu: float, dt: float, tol: float = DEFAULT_TOL,
                max_steps: int = 2_000_000, breakpoints: Sequence[float] = ()) -> OracleResult:
    """Integrate ``U(mu + dt, mu)``; ``dt`` may be negative.

    A jump in ``H`` shows up as :class:`StepSizeUnderflow`. Known jumps can be
    listed in ``breakpoints``: the interval is split there and the pieces are
    composed, each getting its share of ``tol``.
    """
    if tol < 100 * EPS:
        raise ValueError(f"tol={tol} is below 100 * machine epsilon")
    lo, hi = sorted((mu, mu + dt))
    cuts = sorted(b for b in set(breakpoints) | set(ts.breakpoints) if lo < b < hi)
    if not cuts:
        return _integrate(ts, mu, dt, tol, max_steps)
    nodes = [mu] + (cuts if dt > 0 else cuts[::-1]) + [mu + dt]
    U = identity(ts.dim)
    est, steps, rejected = 0.0, 0, 0
    for a, b in zip(nodes, nodes[1:]):
        part = _integrate(ts, a, b - a, tol * abs(b - a) / abs(dt), max_steps, inset=True)
        U = part.U @ U
        est += part.est_error
        steps += part.steps_taken
        rejected += part.rejected
    return OracleResult(U, est, steps, rejected)


def _integrate(ts: TermSet, mu: float, dt: float, tol: float, max_steps: int,
               inset: bool = False) -> OracleResult:
    # inset: keep stage abscissae a few ulps inside the interval so a piece
    # ending on a jump sees only the one-sided limit
    d = ts.dim
    if dt == 0:
        return OracleResult(identity(d), 0.0, 1)

    lo, hi = sorted((mu, mu + dt))
    pad = 8 * EPS * max(1.0, abs(lo), abs(hi)) if inset else 0.0

    def rhs(u: float, y: np.ndarray) -> np.ndarray:
        if inset:
            u = min(max(u, lo + pad), hi - pad)
        return (ts.sum_at(u) @ y.reshape(d, d)).ravel()

    direction = 1.0 if dt > 0 else -1.0
    span = abs(dt)
    end = mu + dt
    hmin = MIN_STEP_FRACTION * span
    allowance = tol / span  # local error permitted per unit of parameter

    u = float(mu)
    y = identity(d).ravel()
    f = rhs(u, y)
    h0 = 0.1 / max(spectral_norm(ts.sum_at(u)), 1e-300)
    h = min(span, h0)
    K = np.empty((_NS + 1, d * d), dtype=np.complex128)
    est, steps, rejected = 0.0, 0, 0
    prev_ratio = 1.0
    while True:
        remaining = abs(end - u)
        if remaining <= 4 * EPS * max(1.0, abs(end)):
            break
        if steps + rejected > max_steps:
            raise StepSizeUnderflow(u, h)
        h = min(h, remaining)
        hs = direction * h
        K[0] = f
        for s in range(1, _NS):
            K[s] = rhs(u + _C[s] * hs, y + hs * (K[:s].T @ _A[s, :s]))
        y_new = y + hs * (K[:_NS].T @ _B)
        K[_NS] = rhs(u + hs, y_new)
        err = _error_norm(K, hs)
        limit = allowance * h
        ratio = err / limit if limit > 0 else 0.0
        if ratio <= 1.0:
            u = end if h == remaining else u + hs
            y = y_new
            f = K[_NS].copy()
            est += err
            steps += 1
            if ratio == 0.0:
                factor = 10.0
            else:
                # PI control on the error-per-unit-step ratio (effective order 8).
                factor = 0.9 * ratio ** (-0.7 / 8) * prev_ratio ** (0.4 / 8)
            h = h * min(10.0, max(0.2, factor))
            prev_ratio = max(ratio, 1e-4)
        else:
            rejected += 1
            h = h * max(0.2, 0.9 * ratio ** (-1 / 8))
            if h < hmin:
                raise StepSizeUnderflow(u, h)
    return OracleResult(as_matrix(y.reshape(d, d)), est, steps, rejected)


def piecewise_constant_exact(segments: Sequence[tuple]) -> np.ndarray:
    """``prod_i exp(H_i w_i)`` with later segments on the left."""
    out = None
    for h, width in segments:
        e = mat_exp(as_matrix(h) * float(width))
        out = e if out is None else e @ out
    if out is None:
        raise ValueError("need at least one segment")
    return out


# ---------------------------------------------------------------------------
# Taylor coefficients of U: T_0 = I, T_{p+1} = T_p H + d/du T_p


@lru_cache(maxsize=None)
def taylor_words(p: int) -> dict[tuple[int, ...], int]:
    """``T_p`` as ``{word: coefficient}``; a word lists derivative orders of ``H``
    from left to right, e.g. ``(1, 0)`` is ``H' H``."""
    if p == 0:
        return {(): 1}
    out: dict[tuple[int, ...], int] = {}
    for w, c in taylor_words(p - 1).items():
        right = w + (0,)
        out[right] = out.get(right, 0) + c
        for i in range(len(w)):
            dw = w[:i] + (w[i] + 1,) + w[i + 1:]
            out[dw] = out.get(dw, 0) + c
    words = dict(sorted(out.items()))
    # every word carries total weight sum(order + 1) == p, and there are at most p! of them
    assert all(sum(x + 1 for x in w) == p for w in words)
    assert sum(words.values()) <= math.factorial(p)
    return words


def _eval_words(words: dict, derivs: list[np.ndarray], d: int) -> np.ndarray:
    acc = np.zeros((d, d), dtype=np.complex128)
    for w, c in words.items():
        prod = identity(d)
        for order in w:
            prod = prod @ derivs[order]
        acc += c * prod
    return acc


def taylor_terms(ts: TermSet, mu: float, P: int) -> list[np.ndarray]:
    """``[T_0(mu), ..., T_P(mu)]``; needs ``H`` derivatives up to order ``P - 1``."""
    if P < 0:
        raise ValueError("P must be nonnegative")
    if P - 1 > ts.max_derivative:
        raise SmoothnessError(f"T_{P} needs derivatives of order {P - 1}; system is "
                              f"{ts.max_derivative}-smooth")
    d = ts.dim
    derivs = [ts.derivative_at(mu, i) for i in range(max(P, 0))]
    return [_eval_words(taylor_words(p), derivs, d) for p in range(P + 1)]


def truncation_bound_check(ts: TermSet, mu: float, dt: float, P: int, *,
                           tol: float = DEFAULT_TOL, grid_points: int = 65,
                           safety: float = 1.1) -> tuple[float, float]:
    """Compare a truncated Taylor series of ``U`` with its remainder bound.

    Returns ``(lhs, rhs)`` with ``lhs = ||U - sum_{p<=P} dt^p T_p / p!||`` and
    ``rhs = safety * max_u ||T_{P+1}(u) U(u, mu)|| dt^{P+1} / (P+1)!`` where the
    max runs over a uniform grid on ``[mu, mu + dt]``.
    """
    if P > ts.max_derivative:
        raise SmoothnessError(f"T_{P + 1} needs derivatives of order {P}; system is "
                              f"{ts.max_derivative}-smooth")
    terms = taylor_terms(ts, mu, P)
    U = ordered_exp(ts, mu, dt, tol).U
    approx = sum(dt**p * t / math.factorial(p) for p, t in enumerate(terms))
    lhs = spectral_norm(U - approx)

    d = ts.dim
    words = taylor_words(P + 1)
    grid = np.linspace(mu, mu + dt, grid_points)
    U_u = identity(d)
    best = 0.0
    for i, u in enumerate(grid):
        if i:
            U_u = ordered_exp(ts, float(grid[i - 1]), float(u - grid[i - 1]), tol).U @ U_u
        derivs = [ts.derivative_at(float(u), j) for j in range(P + 1)]
        best = max(best, spectral_norm(_eval_words(words, derivs, d) @ U_u))
    rhs = safety * best * abs(dt) ** (P + 1) / math.factorial(P + 1)
    return lhs, rhs

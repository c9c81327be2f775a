"""Closed-form error bounds and decomposition planning.

Every bound uses the schedule's exact ``Q_k`` (``q_max``); the bracket
``1.5/3^k <= Q_k <= 2k/3^k`` is only ever checked, never substituted.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .matrix_core import spectral_norm
from .operators import SmoothnessError, TermSet, evaluate_term
from .schedule import Schedule, lts_schedule, q_max

SQRT2 = math.sqrt(2.0)


def _qk(k: int) -> float:
    return q_max(lts_schedule(1, k))


def qk_bounds(k: int) -> tuple[float, float]:
    """``(1.5 / 3^k, 2k / 3^k)``."""
    if k < 1:
        raise ValueError("k must be >= 1")
    return 1.5 / 3**k, 2 * k / 3**k


def single_step_bound(k: int, Lambda: float, dt: float) -> tuple[float, bool]:
    """Error bound for one application of ``U_k`` and whether its hypothesis holds.

    bound = ``2 (3 5^{k-1} Q_k Lambda dt)^{2k+1}``; valid when
    ``2 sqrt(2) 5^{k-1} Q_k Lambda dt <= 1/2``.
    """
    x = 5 ** (k - 1) * _qk(k) * Lambda * dt
    return 2 * (3 * x) ** (2 * k + 1), 2 * SQRT2 * x <= 0.5


def _segment_expr(k, Lambda, dt, epsilon):
    base = 3 * _qk(k) * 5 ** (k - 1) * Lambda * dt
    return 2 * base ** (1 + 1 / (2 * k)) / epsilon ** (1 / (2 * k)), base


def segment_count(k: int, Lambda: float, dt: float, epsilon: float) -> tuple[int, bool]:
    """Smallest integer ``r`` strictly above ``2 (3 Q_k 5^{k-1} Lambda dt)^{1+1/2k} / eps^{1/2k}``.

    ``valid`` reports ``eps <= 3 Q_k 5^{k-1} Lambda dt``.
    """
    if not 0 < epsilon <= 1:
        raise ValueError("epsilon must lie in (0, 1]")
    expr, base = _segment_expr(k, Lambda, dt, epsilon)
    return max(1, math.floor(expr) + 1), epsilon <= base


def exponential_budget(m: int, k: int, Lambda: float, dt: float, epsilon: float) -> tuple[int, bool]:
    """``N = 2 m 5^{k-1} ceil(5 k Lambda dt (5/3)^k (Lambda dt / eps)^{1/2k})``."""
    if not 0 < epsilon <= 1:
        raise ValueError("epsilon must lie in (0, 1]")
    ldt = Lambda * dt
    inner = 5 * k * ldt * (5 / 3) ** k * (ldt / epsilon) ** (1 / (2 * k))
    n = 2 * m * 5 ** (k - 1) * math.ceil(inner)
    return n, epsilon <= 0.9 * (5 / 3) ** k * ldt


def choose_order(Lambda: float, dt: float, epsilon: float, P: float = math.inf) -> int:
    """``min(P, ceil(sqrt(log_{25/3}(Lambda dt / eps) / 2)))``, floored at 1."""
    ratio = Lambda * dt / epsilon
    if ratio <= 0:
        raise ValueError("Lambda * dt / epsilon must be positive")
    if ratio <= 1:
        k = 1
    else:
        y = math.sqrt(0.5 * math.log(ratio) / math.log(25 / 3))
        # absorb rounding so exact powers of 25/3 land on the integer
        k = max(1, math.ceil(y - 1e-9))
    return int(max(1, min(P, k)))


@dataclass(frozen=True)
class XConstants:
    X: tuple[float, ...]
    Gamma: float
    grid_points: int = 65
    safety: float = 1.1


def x_constants(s: Schedule, ts: TermSet, mu: float, dt: float, *, grid_points: int = 65,
                safety: float = 1.1) -> XConstants:
    """``X_0 .. X_{2k}`` summed over the schedule, and ``Gamma = max_p X_p^{1/(p+1)}``.

    ``X_{2k}`` uses the grid maximum of ``||H_j^{(2k)}||`` over
    ``[mu, mu + dt]`` inflated by ``safety``.
    """
    if s.m != ts.m:
        raise ValueError("schedule and system disagree on m")
    top = 2 * s.k
    if top > ts.max_derivative:
        raise SmoothnessError(f"X_{top} needs derivatives of order {top}; system is "
                              f"{ts.max_derivative}-smooth")
    at_mu = [[spectral_norm(evaluate_term(t, mu, p)) for p in range(top)] for t in ts.terms]
    grid = np.linspace(mu, mu + dt, grid_points)
    top_max = [safety * max(spectral_norm(evaluate_term(t, float(u), top)) for u in grid)
               for t in ts.terms]
    X = []
    for p in range(top + 1):
        acc = 0.0
        for f in s.factors:
            norm = top_max[f.term_index - 1] if p == top else at_mu[f.term_index - 1][p]
            acc += norm * f.offset**p * abs(f.weight)
        X.append(acc)
    gamma = max(x ** (1 / (p + 1)) for p, x in enumerate(X))
    return XConstants(tuple(X), gamma, grid_points, safety)


@dataclass(frozen=True)
class DecompositionPlan:
    k: int
    r: int
    N: int
    Lambda: float
    dt: float
    epsilon: float
    single_step_bound: float
    conditions_ok: dict = field(default_factory=dict)
    m: int = 1
    Q_k: float = 0.5
    N_bound: int = 0

    def to_json(self) -> dict:
        return asdict(self)


def make_plan(m: int, Lambda: float, dt: float, epsilon: float, P: float = math.inf,
              k: int | None = None) -> DecompositionPlan:
    """Pick an order, a segment count and the resulting exponential count.

    ``N`` is the count actually used, ``2 m 5^{k-1} r``; ``N_bound`` is the
    closed-form budget. Failed hypotheses are flagged, not refused.
    """
    if not 0 < epsilon <= 1:
        raise ValueError("epsilon must lie in (0, 1]")
    if k is None:
        k = choose_order(Lambda, dt, epsilon, P)
    r, segment_ok = segment_count(k, Lambda, dt, epsilon)
    n_bound, thm1_ok = exponential_budget(m, k, Lambda, dt, epsilon)
    bound, thm3_ok = single_step_bound(k, Lambda, dt / r)
    return DecompositionPlan(
        k=k, r=r, N=2 * m * 5 ** (k - 1) * r, Lambda=Lambda, dt=dt, epsilon=epsilon,
        single_step_bound=bound,
        conditions_ok={
            "theorem3_condition": thm3_ok,
            "segment_epsilon_condition": segment_ok,
            "theorem1_epsilon_condition": thm1_ok,
            "norm_condition_assumed": True,
        },
        m=m, Q_k=_qk(k), N_bound=n_bound,
    )


def qk_table(max_k: int) -> list[dict]:
    rows = []
    for k in range(1, max_k + 1):
        lo, hi = qk_bounds(k)
        rows.append({"k": k, "Q_k": _qk(k), "lower": lo, "upper": hi})
    return rows

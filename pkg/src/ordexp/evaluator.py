"""Numerical evaluation of schedules on concrete operator splits."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .matrix_core import identity, mat_exp, spectral_norm
from .operators import OperatorTerm, TermSet, evaluate_term
from .schedule import ExpFactor, Schedule, merge_adjacent

log = logging.getLogger(__name__)


def _check(s: Schedule, ts: TermSet):
    if s.m != ts.m:
        raise ValueError(f"schedule is for m={s.m} terms but the system has m={ts.m}")


def iter_factor_points(s: Schedule, mu: float, dt: float, r: int = 1):
    """Yield ``(term_index, lambda_i, dlambda_i)`` for every applied factor, in order."""
    h = dt / r
    for q in range(r):
        start = mu + q * h
        for f in s.factors:
            yield f.term_index, start + f.offset * h, f.weight * h


def _apply_factors(factors: Sequence[ExpFactor], ts: TermSet, mu: float, dt: float,
                   out: np.ndarray) -> np.ndarray:
    for f in factors:
        h = evaluate_term(ts.terms[f.term_index - 1], mu + f.offset * dt, 0)
        out = mat_exp(h * (f.weight * dt)) @ out
    return out


def apply_schedule(s: Schedule, ts: TermSet, mu: float, dt: float, *, merge: bool = False) -> np.ndarray:
    """Product ``prod_c exp(H_{j_c}(mu + v_c dt) q_c dt)`` with the first factor rightmost.

    ``dt`` may be negative, which evaluates the formula on the reversed
    interval ``[mu + dt, mu]`` starting from ``mu``.
    """
    _check(s, ts)
    if dt == 0:
        return identity(ts.dim)
    factors = merge_adjacent(s) if merge else s.factors
    return _apply_factors(factors, ts, mu, dt, identity(ts.dim))


def segmented_apply(s: Schedule, ts: TermSet, mu: float, dt: float, r: int) -> np.ndarray:
    """``r`` consecutive applications over sub-intervals of width ``dt/r``."""
    _check(s, ts)
    if r < 1:
        raise ValueError("r must be >= 1")
    h = dt / r
    out = identity(ts.dim)
    for q in range(r):
        out = _apply_factors(s.factors, ts, mu + q * h, h, out)
    return out


def symmetry_defect(s: Schedule, ts: TermSet, mu: float, dt: float) -> float:
    """``|| U~(mu+dt, mu) U~(mu, mu+dt) - I ||``; zero for a symmetric formula."""
    forward = apply_schedule(s, ts, mu, dt)
    backward = apply_schedule(s, ts, mu + dt, -dt)
    return spectral_norm(forward @ backward - identity(ts.dim))


# ---------------------------------------------------------------------------
# Normalisation by a scalar shift kappa(u)


class QuadratureError(RuntimeError):
    pass


def adaptive_simpson(f: Callable[[float], float], a: float, b: float, tol: float = 1e-12,
                     breakpoints: Sequence[float] = (), max_depth: int = 60) -> float:
    """Integrate ``f`` over ``[a, b]``, splitting first at any interior breakpoints."""
    if a == b:
        return 0.0
    sign = 1.0
    if b < a:
        a, b, sign = b, a, -1.0
    cuts = [a] + sorted(x for x in breakpoints if a < x < b) + [b]
    total = 0.0
    for lo, hi in zip(cuts[:-1], cuts[1:]):
        total += _simpson_piece(f, lo, hi, tol * (hi - lo) / (b - a), max_depth)
    return sign * total


def _simpson_piece(f, a, b, tol, max_depth):
    fa, fm, fb = f(a), f((a + b) / 2), f(b)
    whole = (b - a) * (fa + 4 * fm + fb) / 6
    stack = [(a, b, fa, fm, fb, whole, tol, 0)]
    total = 0.0
    while stack:
        a, b, fa, fm, fb, whole, tol, depth = stack.pop()
        m = (a + b) / 2
        flm, frm = f((a + m) / 2), f((m + b) / 2)
        left = (m - a) * (fa + 4 * flm + fm) / 6
        right = (b - m) * (fm + 4 * frm + fb) / 6
        delta = left + right - whole
        if abs(delta) <= 15 * tol or (b - a) < 1e-15 * max(1.0, abs(a)):
            total += left + right + delta / 15
        elif depth >= max_depth:
            raise QuadratureError(f"adaptive Simpson did not converge near [{a}, {b}]")
        else:
            stack.append((a, m, fa, flm, fm, left, tol / 2, depth + 1))
            stack.append((m, b, fm, frm, fb, right, tol / 2, depth + 1))
    return total


@dataclass(frozen=True)
class NormalizationSpec:
    """Scalar shift ``kappa(u)``; ``kappa_derivative(u, p)`` is optional."""

    kappa: Callable[[float], float]
    quadrature_tol: float = 1e-12
    breakpoints: tuple[float, ...] = ()
    kappa_derivative: Callable[[float, int], float] | None = None
    name: str = ""


def kappa_from_catalog(key: str) -> NormalizationSpec:
    """``zero``, ``unit``, ``linear`` or ``const:<value>``."""
    if key == "zero":
        c = 0.0
    elif key == "unit":
        c = 1.0
    elif key.startswith("const:"):
        c = float(key.split(":", 1)[1])
    elif key == "linear":
        return NormalizationSpec(lambda u: u, kappa_derivative=lambda u, p: u if p == 0 else float(p == 1),
                                 name=key)
    else:
        raise KeyError(f"unknown kappa {key!r}")
    return NormalizationSpec(lambda u: c, kappa_derivative=lambda u, p: c if p == 0 else 0.0, name=key)


def shifted_terms(ts: TermSet, norm: NormalizationSpec) -> TermSet:
    """Terms ``H_j - (kappa/m) I``.

    Derivatives beyond order 0 are only available when the normalisation supplies
    ``kappa_derivative``.
    """
    m = ts.m
    eye = identity(ts.dim)

    def shifted(term: OperatorTerm) -> OperatorTerm:
        def ev(u, p):
            kp = norm.kappa(u) if p == 0 else norm.kappa_derivative(u, p)
            return evaluate_term(term, u, p) - (kp / m) * eye

        smooth = term.max_derivative if norm.kappa_derivative is not None else 0
        return OperatorTerm(term.dim, ev, smooth, "analytic", term.name + "'")

    return TermSet(tuple(shifted(t) for t in ts.terms), name=ts.name + "'")


def shifted_spectrum_violations(ts: TermSet, norm: NormalizationSpec, mu: float, dt: float,
                                grid_points: int = 65, tol: float = 1e-10) -> list[float]:
    """Grid points where ``H(u) - kappa(u) I`` has an eigenvalue with positive real part."""
    bad = []
    eye = identity(ts.dim)
    for u in np.linspace(mu, mu + dt, grid_points):
        h = ts.sum_at(float(u)) - norm.kappa(float(u)) * eye
        if np.linalg.eigvals(h).real.max() > tol * max(1.0, spectral_norm(h)):
            bad.append(float(u))
    return bad


def normalized_apply(s: Schedule, ts: TermSet, norm: NormalizationSpec, mu: float, dt: float,
                     r: int = 1) -> tuple[np.ndarray, float]:
    """Apply the schedule to the shifted terms and return ``(product, K)``.

    ``K = exp(int kappa - sum_i kappa(lambda_i) dlambda_i / m)`` is the scalar
    that turns the unshifted product into the normalised approximation:
    ``exp(int kappa) * product == K * segmented_apply(s, ts, ...)``.
    """
    _check(s, ts)
    bad = shifted_spectrum_violations(ts, norm, mu, dt)
    if bad:
        log.warning("kappa leaves eigenvalues with positive real part at %d grid points (first u=%g)",
                    len(bad), bad[0])
    product = segmented_apply(s, shifted_terms(ts, norm), mu, dt, r)
    integral = adaptive_simpson(norm.kappa, mu, mu + dt, norm.quadrature_tol, norm.breakpoints)
    applied = math.fsum(norm.kappa(lam) * dl for _, lam, dl in iter_factor_points(s, mu, dt, r))
    return product, math.exp(integral - applied / ts.m)


def kappa_integral(norm: NormalizationSpec, mu: float, dt: float) -> float:
    return adaptive_simpson(norm.kappa, mu, mu + dt, norm.quadrature_tol, norm.breakpoints)

"""Parameter-dependent operator splits ``H(u) = sum_j H_j(u)``.

A term carries a callable ``eval(u, p)`` returning the ``p``-th derivative of
the term at ``u`` and a declared smoothness class ``max_derivative``. Terms are
immutable and hold no mutable state, so they can be evaluated from several
threads at once.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import minimize_scalar

from .matrix_core import (
    EPS,
    SIGMA_X,
    SIGMA_Z,
    as_matrix,
    identity,
    matrix_from_json,
    random_hermitian,
    spectral_norm,
)

UNBOUNDED = math.inf
ANALYTIC = "analytic"
FINITE_DIFFERENCE = "finite-difference"

DEFAULT_LAMBDA_GRID = 257
DEFAULT_LAMBDA_SAFETY = 1.05


class SmoothnessError(ValueError):
    """A derivative was requested beyond a term's declared smoothness class."""


@dataclass(frozen=True)
class OperatorTerm:
    dim: int
    eval: Callable[[float, int], np.ndarray]
    max_derivative: float = UNBOUNDED
    derivative_mode: str = ANALYTIC
    name: str = ""

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError("dim must be positive")
        if self.max_derivative < 0:
            raise ValueError("max_derivative must be nonnegative")
        if self.derivative_mode not in (ANALYTIC, FINITE_DIFFERENCE):
            raise ValueError(f"unknown derivative_mode {self.derivative_mode!r}")


@lru_cache(maxsize=None)
def central_weights(p: int, accuracy: int = 8) -> tuple[np.ndarray, np.ndarray]:
    """Offsets and weights of the central stencil for the ``p``-th derivative."""
    npoints = 2 * ((p + 1) // 2) - 1 + accuracy
    half = npoints // 2
    offsets = np.arange(-half, half + 1, dtype=float)
    vander = np.vander(offsets, increasing=True).T
    rhs = np.zeros(len(offsets))
    rhs[p] = math.factorial(p)
    return offsets, np.linalg.solve(vander, rhs)


def _finite_difference(term: OperatorTerm, u: float, p: int) -> np.ndarray:
    offsets, weights = central_weights(p)
    h = EPS ** (1.0 / (p + 8)) * max(1.0, abs(u))
    acc = np.zeros((term.dim, term.dim), dtype=np.complex128)
    for o, w in zip(offsets, weights):
        if w != 0.0:
            acc += w * as_matrix(term.eval(u + o * h, 0))
    return acc / h**p


def evaluate_term(term: OperatorTerm, u: float, p: int = 0) -> np.ndarray:
    """``H_j^{(p)}(u)`` for a single term."""
    if p < 0:
        raise ValueError("derivative order must be nonnegative")
    if p > term.max_derivative:
        raise SmoothnessError(
            f"term {term.name or '<anonymous>'} is declared {term.max_derivative}-smooth; "
            f"derivative of order {p} requested"
        )
    if p > 0 and term.derivative_mode == FINITE_DIFFERENCE:
        out = _finite_difference(term, u, p)
    else:
        out = as_matrix(term.eval(u, p))
    if out.shape != (term.dim, term.dim):
        raise ValueError(f"term returned shape {out.shape}, expected {(term.dim, term.dim)}")
    return out


@dataclass(frozen=True)
class TermSet:
    terms: tuple[OperatorTerm, ...]
    name: str = ""
    breakpoints: tuple[float, ...] = ()  # known jumps of H, used by the oracle

    def __post_init__(self):
        object.__setattr__(self, "terms", tuple(self.terms))
        object.__setattr__(self, "breakpoints", tuple(sorted(float(b) for b in self.breakpoints)))
        if not self.terms:
            raise ValueError("a TermSet needs at least one term")
        dims = {t.dim for t in self.terms}
        if len(dims) != 1:
            raise ValueError(f"terms have mismatched dimensions {sorted(dims)}")

    @property
    def m(self) -> int:
        return len(self.terms)

    @property
    def dim(self) -> int:
        return self.terms[0].dim

    @property
    def max_derivative(self) -> float:
        return min(t.max_derivative for t in self.terms)

    def sum_at(self, u: float) -> np.ndarray:
        return self.derivative_at(u, 0)

    def derivative_at(self, u: float, p: int) -> np.ndarray:
        """``H^{(p)}(u)``, summed over terms in order."""
        acc = np.zeros((self.dim, self.dim), dtype=np.complex128)
        for t in self.terms:
            acc = acc + evaluate_term(t, u, p)
        return acc


def sum_derivative_norms(ts: TermSet, u: float, p: int) -> float:
    """``sum_j ||H_j^{(p)}(u)||`` in the spectral norm."""
    return float(sum(spectral_norm(evaluate_term(t, u, p)) for t in ts.terms))


@dataclass(frozen=True)
class SmoothnessEstimate:
    P: int
    Lambda: float
    grid_points: int
    safety_factor: float
    interval: tuple[float, float] = (0.0, 0.0)
    per_order: tuple[float, ...] = ()


def estimate_lambda(
    ts: TermSet,
    interval: tuple[float, float],
    P: int,
    *,
    grid_points: int = DEFAULT_LAMBDA_GRID,
    safety_factor: float = DEFAULT_LAMBDA_SAFETY,
    refine: bool = True,
) -> SmoothnessEstimate:
    """Grid estimate of the smallest admissible Lambda on ``interval``.

    For every ``p <= P`` the quantity ``(sum_j ||H_j^{(p)}(u)||)^{1/(p+1)}`` is
    sampled on a uniform grid; with ``refine`` the best grid point is then
    polished by a bounded scalar maximisation over its two neighbouring
    cells. The result is heuristic: a sup over a continuum cannot be certified
    from samples, which is what ``safety_factor`` is for.
    """
    a, b = map(float, interval)
    if not b > a:
        raise ValueError("interval must have positive length")
    if P < 0:
        raise ValueError("P must be nonnegative")
    if P > ts.max_derivative:
        raise SmoothnessError(f"system is only {ts.max_derivative}-smooth; P={P} requested")
    if safety_factor < 1:
        raise ValueError("safety_factor must be >= 1")
    grid = np.linspace(a, b, grid_points)
    per_order = []
    for p in range(P + 1):
        def g(u, p=p):
            return sum_derivative_norms(ts, float(u), p) ** (1.0 / (p + 1))

        vals = np.array([g(u) for u in grid])
        i = int(np.argmax(vals))
        best = float(vals[i])
        if refine and grid_points > 2 and best > 0:
            lo, hi = grid[max(i - 1, 0)], grid[min(i + 1, grid_points - 1)]
            res = minimize_scalar(
                lambda u: -g(u), bounds=(lo, hi), method="bounded",
                options={"xatol": 1e-12 * max(1.0, abs(b - a))},
            )
            best = max(best, -float(res.fun))
        per_order.append(best)
    return SmoothnessEstimate(
        P=P,
        Lambda=safety_factor * max(per_order),
        grid_points=grid_points,
        safety_factor=safety_factor,
        interval=(a, b),
        per_order=tuple(per_order),
    )


def is_contractive(ts: TermSet, interval: tuple[float, float], grid_points: int = 65,
                   tol: float = 1e-12) -> bool:
    """True when the Hermitian part of ``H(u)`` is negative semidefinite on a grid.

    That makes every ``U(x, y)`` with ``x > y`` a contraction.
    """
    for u in np.linspace(interval[0], interval[1], grid_points):
        h = ts.sum_at(float(u))
        top = np.linalg.eigvalsh((h + h.conj().T) / 2).max()
        if top > tol * max(1.0, spectral_norm(h)):
            return False
    return True


# ---------------------------------------------------------------------------
# Scalar profile catalog: f(u) with analytic derivatives, multiplied by a fixed
# matrix. This is the only route for custom systems; there is no expression
# parser.


@dataclass(frozen=True)
class ScalarProfile:
    name: str
    deriv: Callable[[float, int], float]
    smoothness: Callable[[float, float], float] = lambda a, b: UNBOUNDED


def _trig(omega: float, phase: float) -> Callable[[float, int], float]:
    return lambda u, p: omega**p * math.cos(omega * u + phase + p * math.pi / 2)


@lru_cache(maxsize=None)
def _u3sin_terms(p: int) -> tuple[tuple[int, str, float], ...]:
    """``d^p/du^p [u^3 sin(1/u)]`` as a sum of ``c u^e sin|cos(1/u)``."""
    terms = {(3, "s"): 1.0}
    for _ in range(p):
        new: dict[tuple[int, str], float] = {}
        for (e, kind), c in terms.items():
            # d[u^e sin(1/u)] = e u^{e-1} sin - u^{e-2} cos
            # d[u^e cos(1/u)] = e u^{e-1} cos + u^{e-2} sin
            other = "c" if kind == "s" else "s"
            sign = -1.0 if kind == "s" else 1.0
            if e != 0:
                new[(e - 1, kind)] = new.get((e - 1, kind), 0.0) + c * e
            new[(e - 2, other)] = new.get((e - 2, other), 0.0) + sign * c
        terms = {k: v for k, v in new.items() if v != 0.0}
    return tuple((e, kind, c) for (e, kind), c in sorted(terms.items()))


def u3sin_inv(u: float, p: int = 0) -> float:
    """``u^3 sin(1/u)`` and its derivatives; the value at ``u = 0`` is the limit 0.

    At ``u = 0`` only ``p <= 1`` exists.
    """
    if u == 0.0:
        if p <= 1:
            return 0.0
        raise SmoothnessError(f"u^3 sin(1/u) has no derivative of order {p} at u=0")
    s, c = math.sin(1.0 / u), math.cos(1.0 / u)
    return sum(coef * u**e * (s if kind == "s" else c) for e, kind, coef in _u3sin_terms(p))


def _contains(a: float, b: float, x: float) -> bool:
    return min(a, b) <= x <= max(a, b)


def _step(at: float) -> Callable[[float, int], float]:
    return lambda u, p: (1.0 if u < at else -1.0) if p == 0 else 0.0


def make_profile(name: str, **params) -> ScalarProfile:
    """Look up a catalogued scalar profile.

    ``constant(value)``, ``cos(omega, phase)``, ``sin(omega, phase)``,
    ``linear(slope)``, ``u3sin1u`` and ``sign-flip(at)``.
    """
    if name == "constant":
        value = float(params.get("value", 1.0))
        return ScalarProfile(name, lambda u, p: value if p == 0 else 0.0)
    if name in ("cos", "sin"):
        omega = float(params.get("omega", 1.0))
        phase = float(params.get("phase", 0.0)) - (math.pi / 2 if name == "sin" else 0.0)
        return ScalarProfile(name, _trig(omega, phase))
    if name == "linear":
        slope = float(params.get("slope", 1.0))
        return ScalarProfile(name, lambda u, p: slope * u if p == 0 else (slope if p == 1 else 0.0))
    if name == "u3sin1u":
        return ScalarProfile(name, u3sin_inv, lambda a, b: 1 if _contains(a, b, 0.0) else UNBOUNDED)
    if name == "sign-flip":
        at = float(params.get("at", 0.5))
        return ScalarProfile(
            name, _step(at), lambda a, b: 0 if min(a, b) < at <= max(a, b) else UNBOUNDED
        )
    raise KeyError(f"unknown profile {name!r}")


def scalar_term(profile: ScalarProfile, matrix, interval: tuple[float, float] | None = None,
                name: str = "") -> OperatorTerm:
    """Term ``f(u) * M``; smoothness is taken from the profile on ``interval``.

    Without an interval the profile's worst case around ``u = 0`` is assumed.
    """
    mat = as_matrix(matrix, copy=True)
    a, b = interval if interval is not None else (0.0, 0.0)
    smooth = profile.smoothness(a, b)

    def ev(u: float, p: int) -> np.ndarray:
        return profile.deriv(float(u), p) * mat

    return OperatorTerm(mat.shape[0], ev, smooth, ANALYTIC, name or profile.name)


# ---------------------------------------------------------------------------
# Built-in systems


def _trig_matrix_term(a, b, c, omega, name) -> OperatorTerm:
    a, b, c = (np.array(x, dtype=np.complex128) for x in (a, b, c))

    def ev(u: float, p: int) -> np.ndarray:
        if p == 0:
            return a + b * math.cos(omega * u) + c * math.sin(omega * u)
        ph = omega * u + p * math.pi / 2
        return omega**p * (b * math.cos(ph) + c * math.sin(ph))

    return OperatorTerm(a.shape[0], ev, UNBOUNDED, ANALYTIC, name)


def random_system(seed: int = 0, dim: int = 4, m: int = 2, antihermitian: bool = False) -> TermSet:
    """``m`` terms ``A + B cos(w u) + C sin(w u)`` with random Hermitian ``A, B, C``.

    With ``antihermitian`` every term is multiplied by ``i`` so the evolution is
    unitary.
    """
    rng = np.random.default_rng(seed)
    scale = 1j if antihermitian else 1.0
    terms = []
    for j in range(m):
        a = random_hermitian(rng, dim, 1.0 / m)
        b = random_hermitian(rng, dim, 0.5 / m)
        c = random_hermitian(rng, dim, 0.5 / m)
        omega = float(rng.uniform(0.5, 2.0))
        terms.append(_trig_matrix_term(scale * a, scale * b, scale * c, omega, f"H{j + 1}"))
    kind = "random-antihermitian" if antihermitian else "random-hermitian"
    return TermSet(tuple(terms), name=f"{kind}(seed={seed},dim={dim},m={m})")


BUILTIN_SYSTEMS = ("fig1a", "fig1b", "pauli-flip", "random-hermitian", "random-antihermitian")


def build_system(key: str, *, interval: tuple[float, float] | None = None, seed: int = 0,
                 dim: int = 4, m: int = 2, flip_at: float = 0.5) -> TermSet:
    """Instantiate a registry system by key.

    ``interval`` matters only for systems whose smoothness depends on where
    they are evaluated (``fig1a`` around ``u = 0``, ``pauli-flip`` around the
    flip point).
    """
    eye2 = identity(2)
    if key == "fig1a":
        return TermSet((scalar_term(make_profile("u3sin1u"), eye2, interval, "u^3 sin(1/u)"),),
                       name=key)
    if key == "fig1b":
        return TermSet((scalar_term(make_profile("cos"), eye2, interval, "cos(u)"),), name=key)
    if key == "pauli-flip":
        iv = interval if interval is not None else (0.0, 1.0)
        return TermSet((scalar_term(make_profile("sign-flip", at=flip_at), SIGMA_Z, iv,
                                    "+-sigma_z"),), name=key, breakpoints=(flip_at,))
    if key == "random-hermitian":
        return random_system(seed, dim, m, antihermitian=False)
    if key == "random-antihermitian":
        return random_system(seed, dim, m, antihermitian=True)
    raise KeyError(f"unknown system {key!r}; choose from {', '.join(BUILTIN_SYSTEMS)}")


def load_system_json(obj: dict, interval: tuple[float, float] | None = None) -> TermSet:
    """Build a TermSet from ``{dim, terms: [{kind, profile, params?, matrix}]}``.

    ``matrix`` uses the package's matrix JSON layout (``{dim, entries}``).
    """
    dim = int(obj["dim"])
    terms, jumps = [], []
    for i, entry in enumerate(obj["terms"]):
        if entry.get("kind", "scalar-profile") != "scalar-profile":
            raise ValueError(f"term {i}: unsupported kind {entry.get('kind')!r}")
        mat = matrix_from_json(entry["matrix"])
        if mat.shape[0] != dim:
            raise ValueError(f"term {i}: matrix dim {mat.shape[0]} != system dim {dim}")
        profile = make_profile(entry["profile"], **entry.get("params", {}))
        if entry["profile"] == "sign-flip":
            jumps.append(float(entry.get("params", {}).get("at", 0.5)))
        terms.append(scalar_term(profile, mat, interval, f"{entry['profile']}[{i}]"))
    return TermSet(tuple(terms), name=obj.get("name", "custom"),
                   breakpoints=tuple(jumps) + tuple(obj.get("breakpoints", ())))


def constant_system(matrices: Sequence, name: str = "constant") -> TermSet:
    """TermSet of parameter-independent terms."""
    terms = []
    for i, mtx in enumerate(matrices):
        mat = as_matrix(mtx, copy=True)
        zero = np.zeros_like(mat)
        terms.append(OperatorTerm(mat.shape[0], lambda u, p, mat=mat, zero=zero: mat if p == 0 else zero,
                                  UNBOUNDED, ANALYTIC, f"C{i + 1}"))
    return TermSet(tuple(terms), name=name)


def pauli_pair() -> TermSet:
    """Constant non-commuting split ``{sigma_x, sigma_z}``."""
    return constant_system([SIGMA_X, SIGMA_Z], name="pauli-pair")

"""Symbolic Lie-Trotter-Suzuki schedules.

A schedule is the ordered list of factors ``exp(H_j(mu + v*dt) * q*dt)``. The
first factor in ``Schedule.factors`` acts first, i.e. it is the rightmost
matrix in the operator product. Term indices are 1-based to match the JSON
exchange format.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import NamedTuple

MAX_ORDER = 12


class ExpFactor(NamedTuple):
    term_index: int
    offset: float
    weight: float


@dataclass(frozen=True)
class Schedule:
    m: int
    k: int
    factors: tuple[ExpFactor, ...]

    def __post_init__(self):
        object.__setattr__(self, "factors", tuple(self.factors))
        if self.m < 1 or self.k < 1:
            raise ValueError("m and k must be positive")
        for f in self.factors:
            if not 1 <= f.term_index <= self.m:
                raise ValueError(f"term index {f.term_index} outside [1, {self.m}]")
            if not -1e-12 <= f.offset <= 1 + 1e-12:
                raise ValueError(f"offset {f.offset} outside [0, 1]")

    def __len__(self) -> int:
        return len(self.factors)

    def weight_sums(self) -> list[float]:
        """Total weight per term; each should be 1."""
        sums = [0.0] * self.m
        for f in self.factors:
            sums[f.term_index - 1] += f.weight
        return sums

    def to_json(self) -> dict:
        return {
            "m": self.m,
            "k": self.k,
            "factors": [{"j": f.term_index, "v": f.offset, "q": f.weight} for f in self.factors],
        }

    @classmethod
    def from_json(cls, obj: dict) -> "Schedule":
        factors = tuple(ExpFactor(int(f["j"]), float(f["v"]), float(f["q"])) for f in obj["factors"])
        return cls(int(obj["m"]), int(obj["k"]), factors)


def s_coefficient(p: int) -> float:
    """Suzuki's coefficient ``(4 - 4^{1/(2p+1)})^{-1}``."""
    if p < 1:
        raise ValueError("p must be >= 1")
    return 1.0 / (4.0 - 4.0 ** (1.0 / (2 * p + 1)))


def base_schedule(m: int) -> Schedule:
    """Symmetric second-order splitting: terms 1..m then m..1, each at the
    midpoint with half the step."""
    if m < 1:
        raise ValueError("m must be >= 1")
    order = list(range(1, m + 1)) + list(range(m, 0, -1))
    return Schedule(m, 1, tuple(ExpFactor(j, 0.5, 0.5) for j in order))


def recurse(s: Schedule) -> Schedule:
    """One step of Suzuki's five-block recursion, raising the order index by one.

    Five rescaled copies of ``s`` cover ``[0, s_p]``, ``[s_p, 2s_p]``,
    ``[2s_p, 1-2s_p]`` (negative width, so that block runs backward),
    ``[1-2s_p, 1-s_p]`` and ``[1-s_p, 1]``, in the order they act.
    """
    sp = s_coefficient(s.k)
    blocks = [(0.0, sp), (sp, sp), (2 * sp, 1 - 4 * sp), (1 - 2 * sp, sp), (1 - sp, sp)]
    factors = tuple(
        ExpFactor(j, start + v * width, q * width)
        for start, width in blocks
        for j, v, q in s.factors
    )
    return Schedule(s.m, s.k + 1, factors)


@lru_cache(maxsize=64)
def lts_schedule(m: int, k: int) -> Schedule:
    """The k-th order Lie-Trotter-Suzuki schedule with ``2 m 5^(k-1)`` factors."""
    if k < 1:
        raise ValueError("k must be >= 1")
    if k > MAX_ORDER:
        raise ValueError(f"k={k} would need {2 * m * 5 ** (k - 1)} factors; limit is k <= {MAX_ORDER}")
    if k == 1:
        return base_schedule(m)
    return recurse(lts_schedule(m, k - 1))


def q_max(s: Schedule) -> float:
    """Largest ``|q_c|`` over the schedule (``Q_k``)."""
    return max(abs(f.weight) for f in s.factors)


def q_max_closed_form(k: int) -> float:
    """``(1/2) prod_{i<k} max(s_i, |1 - 4 s_i|)``."""
    q = 0.5
    for i in range(1, k):
        si = s_coefficient(i)
        q *= max(si, abs(1 - 4 * si))
    return q


def merge_adjacent(s: Schedule, tol: float = 1e-15) -> tuple[ExpFactor, ...]:
    """Fuse neighbouring factors that share term and offset.

    Off by default everywhere; merged lists break the ``2 m 5^(k-1)`` count.
    """
    out: list[ExpFactor] = []
    for f in s.factors:
        if out and out[-1].term_index == f.term_index and math.isclose(
            out[-1].offset, f.offset, rel_tol=0.0, abs_tol=tol
        ):
            prev = out.pop()
            out.append(ExpFactor(prev.term_index, prev.offset, prev.weight + f.weight))
        else:
            out.append(f)
    return tuple(out)

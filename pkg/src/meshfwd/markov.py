"""Absorbing Markov chain for node-disjoint paths with end-to-end coding.

``n`` paths of ``m`` hops each, every hop failing independently with
probability ``e``. A state records how many hops the packet on each path
has traversed; the chain absorbs once ``k`` packets reached the
destination. States are encoded mixed-radix in base ``m + 1`` with
coordinate 0 least significant, so the all-zero start has code 0 and every
forward move strictly increases the code.
"""
from __future__ import annotations

import math
import os
from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np

from meshfwd import netcode
from meshfwd.results import SchemeResult, attach_ratios

ChainState = tuple  # tuple[int, ...] of hops traversed per path

STATE_BUDGET_ENV = "MESHFWD_STATE_BUDGET"
DEFAULT_STATE_BUDGET = 10**6
DENSE_SOLVE_LIMIT = 5000


class StateBudgetError(ValueError):
    def __init__(self, required: int, budget: int):
        super().__init__(f"chain needs {required} states but the budget is {budget} "
                         f"(override with {STATE_BUDGET_ENV})")
        self.required = required
        self.budget = budget


def default_state_budget() -> int:
    return int(os.environ.get(STATE_BUDGET_ENV, DEFAULT_STATE_BUDGET))


@dataclass(frozen=True)
class AbsorptionProblem:
    n: int
    m: int
    k: int
    e: float
    state_budget: int = field(default_factory=default_state_budget)

    def __post_init__(self):
        if self.n < 1 or self.m < 1:
            raise ValueError(f"need n >= 1 and m >= 1, got n={self.n}, m={self.m}")
        if not 1 <= self.k <= self.n:
            raise ValueError(f"need 1 <= k <= n, got k={self.k}, n={self.n}")
        if not 0.0 <= self.e <= 1.0:
            raise ValueError(f"e={self.e} is not a probability")
        if self.size > self.state_budget:
            raise StateBudgetError(self.size, self.state_budget)

    @property
    def size(self) -> int:
        return (self.m + 1) ** self.n

    def radix_powers(self) -> np.ndarray:
        return (self.m + 1) ** np.arange(self.n, dtype=np.int64)

    def encode(self, state: Sequence[int]) -> int:
        return int(np.dot(state, self.radix_powers()))

    def decode(self, code: int) -> ChainState:
        out = []
        for _ in range(self.n):
            code, r = divmod(code, self.m + 1)
            out.append(r)
        return tuple(out)


def _all_states(problem: AbsorptionProblem) -> np.ndarray:
    """Digit matrix of shape (size, n); row index equals the state code."""
    codes = np.arange(problem.size, dtype=np.int64)
    return (codes[:, None] // problem.radix_powers()[None, :]) % (problem.m + 1)


def finished_count(state: Sequence[int], m: int) -> int:
    return sum(s // m for s in state)


def enumerate_states(problem: AbsorptionProblem) -> tuple[list[ChainState], int]:
    """Transient states (start first, then ascending code) and the absorbing count."""
    digits = _all_states(problem)
    fin = (digits == problem.m).sum(axis=1)
    transient = digits[fin < problem.k]
    return [tuple(int(x) for x in row) for row in transient], int((fin >= problem.k).sum())


def absorbing_class_count(n: int, k: int) -> int:
    """Number of ways to pick the finished path set with at least ``k`` members."""
    return sum(math.comb(n, i) for i in range(k, n + 1))


def transition_prob(si: Sequence[int], sj: Sequence[int], problem: AbsorptionProblem) -> float:
    m, e = problem.m, problem.e
    cor = 0
    for a, b in zip(si, sj):
        step = b - a
        if step < 0 or step > 1:
            return 0.0
        if a == m and step:
            return 0.0
        cor += step
    fin = finished_count(si, m)
    return _powers(e, problem.n - cor - fin, cor)


def _powers(e: float, fails: int, successes: int) -> float:
    return e**fails * (1.0 - e) ** successes


@dataclass(frozen=True)
class TransientSystem:
    problem: AbsorptionProblem
    states: tuple  # transient states, start first
    P: np.ndarray

    @property
    def size(self) -> int:
        return len(self.states)


class _SubsetTables:
    """Per active-path count ``a``: subset bit patterns and success counts."""

    def __init__(self, n: int):
        self.bits = []
        self.counts = []
        for a in range(n + 1):
            masks = np.arange(1 << a, dtype=np.int64)
            bits = (masks[:, None] >> np.arange(a, dtype=np.int64)[None, :]) & 1
            self.bits.append(bits)
            self.counts.append(bits.sum(axis=1))


def _successors(problem: AbsorptionProblem, digits: np.ndarray, tables: _SubsetTables, code: int):
    """Codes and probabilities of every move out of ``code`` (self-loop first)."""
    state = digits[code]
    active = np.flatnonzero(state < problem.m)
    a = len(active)
    offsets = tables.bits[a] @ problem.radix_powers()[active]
    c = tables.counts[a]
    probs = problem.e ** (a - c) * (1.0 - problem.e) ** c
    return code + offsets, probs


def build_transient_system(problem: AbsorptionProblem) -> TransientSystem:
    digits = _all_states(problem)
    fin = (digits == problem.m).sum(axis=1)
    transient_codes = np.flatnonzero(fin < problem.k)
    index = np.full(problem.size, -1, dtype=np.int64)
    index[transient_codes] = np.arange(len(transient_codes))
    tables = _SubsetTables(problem.n)
    P = np.zeros((len(transient_codes), len(transient_codes)))
    for row, code in enumerate(transient_codes):
        targets, probs = _successors(problem, digits, tables, code)
        cols = index[targets]
        keep = cols >= 0
        np.add.at(P[row], cols[keep], probs[keep])
    states = tuple(tuple(int(x) for x in digits[c]) for c in transient_codes)
    return TransientSystem(problem, states, P)


def absorption_times_solve(system: TransientSystem) -> np.ndarray:
    """``t = (I - P)^{-1} 1`` by LU with partial pivoting."""
    A = np.eye(system.size) - system.P
    return np.linalg.solve(A, np.ones(system.size))


def absorption_times_dp(problem: AbsorptionProblem) -> np.ndarray:
    """Back-substitution over descending codes; returns times for every code (0 when absorbed).

    Only the self-loop keeps a state in place, so
    ``t(S) = (1 + sum_{S' != S} P(S,S') t(S')) / (1 - P(S,S))``.
    """
    digits = _all_states(problem)
    fin = (digits == problem.m).sum(axis=1)
    tables = _SubsetTables(problem.n)
    t = np.zeros(problem.size)
    for code in range(problem.size - 1, -1, -1):
        if fin[code] >= problem.k:
            continue
        targets, probs = _successors(problem, digits, tables, code)
        stay = probs[0]
        if stay >= 1.0:
            t[code] = math.inf
            continue
        t[code] = (1.0 + float(np.dot(probs[1:], t[targets[1:]]))) / (1.0 - stay)
    return t


def expected_absorption_time(problem: AbsorptionProblem, method: str = "auto") -> float:
    """Expected slots from the all-zero state until ``k`` packets arrived.

    ``method`` is ``"solve"`` (dense linear system), ``"dp"`` or ``"auto"``
    (dense up to 5000 transient states). Returns ``inf`` when the chain
    cannot absorb (``e == 1``).
    """
    if problem.e >= 1.0:
        return math.inf
    if method == "auto":
        transient = problem.size - absorbing_count(problem)
        method = "solve" if transient <= DENSE_SOLVE_LIMIT else "dp"
    if method == "dp":
        return float(absorption_times_dp(problem)[0])
    if method != "solve":
        raise ValueError(f"unknown method {method!r}")
    system = build_transient_system(problem)
    if system.size > DENSE_SOLVE_LIMIT:
        raise ValueError(f"{system.size} transient states exceed the dense-solve limit {DENSE_SOLVE_LIMIT}; use 'dp'")
    try:
        return float(absorption_times_solve(system)[0])
    except np.linalg.LinAlgError:
        return math.inf


def absorbing_count(problem: AbsorptionProblem) -> int:
    # tuples with at least k coordinates equal to m
    n, k, m = problem.n, problem.k, problem.m
    return sum(math.comb(n, i) * m ** (n - i) for i in range(k, n + 1))


SCHEMES = ("SP", "MP", "MC", "NC", "NC-L", "NC-U")


def _generation_size(n: int) -> int | None:
    k = (n + 1).bit_length() - 1
    return k if (1 << k) - 1 == n else None


def scheme_delay_throughput(scheme: str, n: int, m: int, e: float, k_data: int | None = None,
                            strict: bool = False, method: str = "auto") -> SchemeResult:
    """Delay (slots) and throughput (packets/slot) of one scheme on ``n`` disjoint ``m``-hop paths.

    NC codes ``k_data`` packets into ``n`` combinations; ``NC``/``NC-L``
    absorb after ``k_data`` arrivals and ``NC-U`` after the worst-case
    number of combinations needed to decode.
    """
    if scheme not in SCHEMES:
        raise ValueError(f"unknown scheme {scheme!r}; expected one of {SCHEMES}")

    def absorb(paths, k):
        return expected_absorption_time(AbsorptionProblem(paths, m, k, e), method)

    if scheme in ("SP", "MP"):
        d_sp = absorb(1, 1)
        return SchemeResult.from_delay(scheme, d_sp, 1 if scheme == "SP" else n)
    if scheme == "MC":
        return SchemeResult.from_delay("MC", absorb(n, 1), 1)

    if k_data is None:
        k_data = _generation_size(n)
        if k_data is None:
            raise ValueError(f"NC on {n} paths needs an explicit generation size")
    if strict and (1 << k_data) - 1 != n:
        raise ValueError(f"strict mode requires n = 2^k - 1 coded packets; k={k_data} gives "
                         f"{(1 << k_data) - 1}, not n={n}")
    needed = k_data
    if scheme == "NC-U":
        needed = netcode.decode_bounds(k_data)[1] if k_data <= 8 else k_data + 1
    if needed > n:
        raise ValueError(f"{scheme} needs {needed} coded packets but only {n} paths exist")
    return SchemeResult.from_delay(scheme, absorb(n, needed), k_data, packets_needed=needed)


def all_schemes(n: int, m: int, e: float, k_data: int | None = None, strict: bool = False,
                schemes: Sequence[str] | None = None, method: str = "auto") -> dict[str, SchemeResult]:
    """Every applicable scheme with ratios to SP.

    Without an explicit list, NC is reported once for three paths and as
    the NC-L/NC-U pair when the bounds differ.
    """
    if schemes is None:
        schemes = ["SP", "MP", "MC"]
        k = k_data or _generation_size(n)
        if k is not None and k <= n and n > 1:
            lo, hi = netcode.decode_bounds(k) if k <= 8 else (k, k + 1)
            if hi == lo or hi > n:
                schemes.append("NC")
            else:
                schemes += ["NC-L", "NC-U"]
    out = {s: scheme_delay_throughput(s, n, m, e, k_data, strict, method) for s in schemes}
    if "SP" not in out:
        out["SP"] = scheme_delay_throughput("SP", n, m, e, method=method)
    return attach_ratios(out)

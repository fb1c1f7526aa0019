"""Closed-form delay and throughput of the small analytic topologies.

Delays are in slots. Every recursion is written in renewal form: one slot
is spent, then the residual delay of the outcome; the self-loop outcome
(nothing useful received) is eliminated exactly. Any self-loop probability
of 1 yields an unreachable :class:`SchemeResult` rather than an exception.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from itertools import combinations
from typing import Iterable, Mapping, Sequence

from meshfwd import channel
from meshfwd.results import SchemeResult, attach_ratios

LINKS = (1, 2, 3)


def _renewal(loop: float, rest: float) -> float:
    """Solve ``D = 1 + rest + loop * D``."""
    if loop >= 1.0:
        return math.inf
    return (1.0 + rest) / (1.0 - loop)


def _check_probability(e: float, name: str = "e") -> None:
    if not 0.0 <= e <= 1.0 or math.isnan(e):
        raise ValueError(f"{name}={e} is not a probability")


@dataclass
class ConditionalErrorTable:
    """Error probability of link ``i`` given the set of links transmitting with it."""

    entries: dict = field(default_factory=dict)

    def __post_init__(self):
        self.entries = {(i, frozenset(t)): float(v) for (i, t), v in self.entries.items()}
        for (i, t), v in self.entries.items():
            if i not in t:
                raise ValueError(f"link {i} must belong to its own transmitting set {sorted(t)}")
            _check_probability(v, f"e_{i}/{sorted(t)}")

    def __getitem__(self, key) -> float:
        i, active = key
        try:
            return self.entries[(i, frozenset(active))]
        except KeyError:
            raise KeyError(f"missing conditional error e_{i}/{sorted(active)}") from None

    def set(self, i: int, active: Iterable[int], value: float) -> None:
        _check_probability(value)
        self.entries[(i, frozenset(active))] = float(value)

    def missing(self, links: Sequence[int] = LINKS) -> list[tuple[int, frozenset]]:
        need = []
        for size in range(1, len(links) + 1):
            for t in combinations(links, size):
                need.extend((i, frozenset(t)) for i in t if (i, frozenset(t)) not in self.entries)
        return need

    @classmethod
    def uniform(cls, e: float, links: Sequence[int] = LINKS) -> "ConditionalErrorTable":
        """Interference-insensitive table: every entry equals ``e``."""
        return cls.from_function(lambda i, t: e, links)

    @classmethod
    def from_function(cls, fn, links: Sequence[int] = LINKS) -> "ConditionalErrorTable":
        table = cls()
        for size in range(1, len(links) + 1):
            for t in combinations(links, size):
                for i in t:
                    table.set(i, t, fn(i, frozenset(t)))
        return table

    @classmethod
    def from_channel(cls, links: Mapping[int, tuple], params: channel.ChannelParams,
                     positions: Mapping) -> "ConditionalErrorTable":
        """Populate from the SINR model; ``links`` maps link index -> (tx node, rx node)."""
        def fn(i, active):
            tx, rx = links[i]
            return channel.link_error(tx, rx, {links[a][0] for a in active}, params, positions)
        return cls.from_function(fn, tuple(sorted(links)))


def sinr_three_path(errors: ConditionalErrorTable) -> dict[str, SchemeResult]:
    """SP, MP, MC and NC (generation of 2) over three interfering single-hop links.

    MP reports the time to deliver all three striped packets as its delay,
    with three packets per delivery; ``extras['per_packet_delay']`` holds the
    per-packet average ``D_mp,3 / 3``.
    """
    missing = errors.missing()
    if missing:
        raise KeyError(f"conditional error table incomplete: {[(i, sorted(t)) for i, t in missing]}")
    full = frozenset(LINKS)

    def e(i, active=full):
        return errors[i, active]

    def single(i):
        return _renewal(e(i, {i}), 0.0)

    def pair_all(a, b):
        # both packets still outstanding on links a, b
        ea, eb = e(a, {a, b}), e(b, {a, b})
        rest = (1 - ea) * eb * single(b) + ea * (1 - eb) * single(a)
        return _renewal(ea * eb, rest)

    def pair_any(a, b):
        return _renewal(e(a, {a, b}) * e(b, {a, b}), 0.0)

    best = min(LINKS, key=lambda i: e(i, {i}))
    d_sp = single(best)

    e1, e2, e3 = (e(i) for i in LINKS)
    loop = e1 * e2 * e3
    d_mc = _renewal(loop, 0.0)

    # exactly one link succeeded: residual depends on the other two
    one_ok = {
        1: (1 - e1) * e2 * e3,
        2: (1 - e2) * e1 * e3,
        3: (1 - e3) * e1 * e2,
    }
    # exactly two succeeded: the third is outstanding
    two_ok = {
        3: (1 - e1) * (1 - e2) * e3,
        2: (1 - e1) * (1 - e3) * e2,
        1: (1 - e2) * (1 - e3) * e1,
    }
    others = {1: (2, 3), 2: (1, 3), 3: (1, 2)}

    d_nc = _renewal(loop, sum(p * pair_any(*others[i]) for i, p in one_ok.items()))
    d_mp3 = _renewal(
        loop,
        sum(p * single(i) for i, p in two_ok.items())
        + sum(p * pair_all(*others[i]) for i, p in one_ok.items()),
    )

    results = {
        "SP": SchemeResult.from_delay("SP", d_sp, 1, best_link=best),
        "MP": SchemeResult.from_delay("MP", d_mp3, 3, per_packet_delay=d_mp3 / 3),
        "MC": SchemeResult.from_delay("MC", d_mc, 1),
        "NC": SchemeResult.from_delay("NC", d_nc, 2),
    }
    return attach_ratios(results)


@lru_cache(maxsize=None)
def accumulation_delay(needed: int, links: int, e: float) -> float:
    """Expected slots until ``needed`` successes accumulate.

    Each slot all ``links`` links transmit (the shared node re-encodes, so
    every link always carries a fresh combination) and succeed
    independently with probability ``1 - e``.
    """
    if needed <= 0:
        return 0.0
    if e >= 1.0:
        return math.inf
    q = 1.0 - e
    rest = sum(
        math.comb(links, s) * q**s * e ** (links - s) * accumulation_delay(needed - s, links, e)
        for s in range(1, links + 1)
    )
    return _renewal(e**links, rest)


def _equal_error_basics(e: float, n: int) -> dict[str, SchemeResult]:
    d_sp = _renewal(e, 0.0)
    return {
        "SP": SchemeResult.from_delay("SP", d_sp, 1),
        "MP": SchemeResult.from_delay("MP", d_sp, n),
        "MC": SchemeResult.from_delay("MC", _renewal(e**n, 0.0), 1),
    }


def hopbyhop_three(e: float) -> dict[str, SchemeResult]:
    """Three single-hop paths sharing endpoints, NC with a generation of two."""
    _check_probability(e)
    out = _equal_error_basics(e, 3)
    if e >= 1.0:
        out["NC"] = SchemeResult.unreachable("NC", 2)
        return attach_ratios(out)
    q = 1.0 - e
    d1 = 1.0 / (1.0 - e**3)
    d_nc = (q**3 + 3 * e * q**2 + 3 * e**2 * q * (1 + d1) + e**3) / (1.0 - e**3)
    out["NC"] = SchemeResult.from_delay("NC", d_nc, 2)
    return attach_ratios(out)


def _seven_path_nc(e: float, needed: int) -> float:
    # Outer step by binomial success count, residuals from the accumulation chain.
    q = 1.0 - e
    p = [math.comb(7, i) * q**i * e ** (7 - i) for i in range(8)]
    done = sum(p[needed:])
    rest = sum(p[i] * (1 + accumulation_delay(needed - i, 7, e)) for i in range(1, needed))
    return (done + rest + e**7) / (1.0 - e**7)


def hopbyhop_seven(e: float) -> dict[str, SchemeResult]:
    """Seven single-hop paths, NC over a generation of three.

    Decoding needs at least three and at most four combinations; the two
    bounds are reported as ``NC-L`` and ``NC-U``.
    """
    _check_probability(e)
    out = _equal_error_basics(e, 7)
    if e >= 1.0:
        out["NC-L"] = SchemeResult.unreachable("NC-L", 3)
        out["NC-U"] = SchemeResult.unreachable("NC-U", 3)
        return attach_ratios(out)
    out["NC-L"] = SchemeResult.from_delay("NC-L", _seven_path_nc(e, 3), 3)
    out["NC-U"] = SchemeResult.from_delay("NC-U", _seven_path_nc(e, 4), 3)
    return attach_ratios(out)


def hetero_three(e1: float, e2: float, e3: float) -> dict[str, SchemeResult]:
    """Three single-hop paths with per-path error probabilities."""
    errs = (e1, e2, e3)
    for idx, e in enumerate(errs, 1):
        _check_probability(e, f"e{idx}")
    prod_e = e1 * e2 * e3
    d_sp = _renewal(min(errs), 0.0)
    singles = [_renewal(e, 0.0) for e in errs]
    d_mp = sum(singles) / 3
    d_mc = _renewal(prod_e, 0.0)
    out = {
        "SP": SchemeResult.from_delay("SP", d_sp, 1),
        "MP": SchemeResult.from_delay("MP", d_mp, 3),
        "MC": SchemeResult.from_delay("MC", d_mc, 1),
    }
    if prod_e >= 1.0:
        out["NC"] = SchemeResult.unreachable("NC", 2)
        return attach_ratios(out)
    d1 = 1.0 / (1.0 - prod_e)
    all_ok = (1 - e1) * (1 - e2) * (1 - e3)
    two_ok = sum(errs[i] * math.prod(1 - errs[j] for j in range(3) if j != i) for i in range(3))
    one_ok = sum((1 - errs[i]) * math.prod(errs[j] for j in range(3) if j != i) for i in range(3))
    d_nc = (all_ok + two_ok + one_ok * (1 + d1) + prod_e) / (1.0 - prod_e)
    out["NC"] = SchemeResult.from_delay("NC", d_nc, 2)
    return attach_ratios(out)


def extend_hops(per_hop: SchemeResult, hops: int) -> SchemeResult:
    """Equal-error multi-hop extension: the per-hop delays add up."""
    if not isinstance(hops, int) or hops < 1:
        raise ValueError(f"hops must be a positive integer, got {hops!r}")
    out = per_hop.scaled(hops)
    if per_hop.delay_ratio_to_sp is not None:
        # every scheme scales by the same factor, so ratios are unchanged
        out = SchemeResult(out.scheme, out.delay, out.throughput, out.packets,
                           per_hop.delay_ratio_to_sp, per_hop.throughput_ratio_to_sp, out.extras)
    return out

"""SINR reception under Rayleigh fading.

A packet from ``i`` is received at ``j`` iff

    A(i,j) g(i,j) / (eta_j + sum_{k in T, k != i} A(k,j) g(k,j)) >= gamma_j

with ``g(i,j) = P_tx(i) * r(i,j)**-alpha`` and ``A`` exponentially
distributed with mean ``v(i,j)``. Marginalising the fading gives the
closed-form success probability implemented by :func:`success_probability`.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Hashable, Iterable, Mapping

Node = Hashable

# Beyond this many interferers the product is accumulated as a sum of logs.
_LOG_SPACE_THRESHOLD = 16


class DegenerateLinkError(ValueError):
    """Transmitter and receiver share a position (r = 0)."""


@dataclass(frozen=True)
class NodePosition:
    x: float
    y: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise ValueError(f"non-finite node position ({self.x}, {self.y})")

    def distance(self, other: "NodePosition") -> float:
        return math.hypot(self.x - other.x, self.y - other.y)


@dataclass(frozen=True)
class ChannelParams:
    """Physical-layer parameters.

    Scalars apply network-wide; the ``*_at`` / ``*_of`` mappings override
    them per receiver, per transmitter or per link.
    """

    gamma: float = 1.0
    eta: float = 0.0
    alpha: float = 2.0
    tx_power: float = 1.0
    fading_param: float = 1.0
    gamma_at: Mapping[Node, float] = field(default_factory=dict)
    eta_at: Mapping[Node, float] = field(default_factory=dict)
    tx_power_of: Mapping[Node, float] = field(default_factory=dict)
    fading_of: Mapping[tuple, float] = field(default_factory=dict)

    def __post_init__(self):
        if self.gamma < 0 or any(g < 0 for g in self.gamma_at.values()):
            raise ValueError("gamma must be >= 0")
        if self.eta < 0 or any(n < 0 for n in self.eta_at.values()):
            raise ValueError("eta must be >= 0")
        if self.tx_power <= 0 or any(p <= 0 for p in self.tx_power_of.values()):
            raise ValueError("tx_power must be > 0")
        if self.fading_param <= 0 or any(v <= 0 for v in self.fading_of.values()):
            raise ValueError("fading_param must be > 0")
        if not 2.0 <= self.alpha <= 4.0:
            warnings.warn(f"path-loss exponent {self.alpha} outside the usual [2, 4] range", stacklevel=3)

    def gamma_of(self, j: Node) -> float:
        return self.gamma_at.get(j, self.gamma)

    def eta_of(self, j: Node) -> float:
        return self.eta_at.get(j, self.eta)

    def power_of(self, i: Node) -> float:
        return self.tx_power_of.get(i, self.tx_power)

    def fading(self, i: Node, j: Node) -> float:
        return self.fading_of.get((i, j), self.fading_param)


def _as_position(p) -> NodePosition:
    return p if isinstance(p, NodePosition) else NodePosition(*p)


def received_power_factor(i: Node, j: Node, params: ChannelParams, positions: Mapping[Node, object]) -> float:
    """Mean-free received power factor ``P_tx(i) * r(i,j)**-alpha``."""
    if i == j:
        raise DegenerateLinkError(f"degenerate link: {i!r} -> itself")
    r = _as_position(positions[i]).distance(_as_position(positions[j]))
    if r <= 0:
        raise DegenerateLinkError(f"degenerate link: {i!r} and {j!r} are co-located")
    try:
        return params.power_of(i) * r ** (-params.alpha)
    except OverflowError:
        raise DegenerateLinkError(f"degenerate link: {i!r} and {j!r} are {r:g} apart") from None


def success_probability(
    i: Node,
    j: Node,
    transmitters: Iterable[Node],
    params: ChannelParams,
    positions: Mapping[Node, object],
) -> float:
    """Probability that ``j`` decodes ``i`` while every node in ``transmitters`` is on air."""
    tx = set(transmitters)
    if not tx or i not in tx:
        raise ValueError(f"intended transmitter {i!r} must belong to the transmission set")
    if j in tx:
        raise ValueError(f"receiver {j!r} cannot be transmitting")
    gamma = params.gamma_of(j)
    if gamma == 0:
        return 1.0
    signal = params.fading(i, j) * received_power_factor(i, j, params, positions)
    interferers = [k for k in tx if k != i and k != j]
    noise_term = gamma * params.eta_of(j) / signal
    ratios = [gamma * params.fading(k, j) * received_power_factor(k, j, params, positions) / signal
              for k in interferers]
    if len(interferers) > _LOG_SPACE_THRESHOLD:
        log_p = -noise_term - math.fsum(math.log1p(x) for x in ratios)
        return math.exp(log_p)
    p = math.exp(-noise_term)
    for x in ratios:
        p /= 1.0 + x
    return p


def link_error(i: Node, j: Node, transmitters: Iterable[Node], params: ChannelParams,
               positions: Mapping[Node, object]) -> float:
    """Complement of :func:`success_probability`."""
    return 1.0 - success_probability(i, j, transmitters, params, positions)

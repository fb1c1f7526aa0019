from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Sequence

from meshfwd import netcode
from meshfwd.channel import ChannelParams
from meshfwd.simulator.topology import Topology

SCHEMES = ("SP", "MP", "MC", "NC", "G-NC")

# 20 dBm transmit power over free-space (alpha = 2) path loss with a 20 dB
# SINR threshold. Noise leaves a ~31x margin over the threshold on a 40 m
# hop, ~6x on the 89 m outer diagonal of a d_v = 80 m grid and ~3x at
# d_v = 120 m, so any concurrent transmitter within ~2x the link length
# is usually fatal.
DEFAULT_CHANNEL = dict(gamma=100.0, eta=2e-8, alpha=2.0, tx_power=0.1, fading_param=1.0)


def default_channel() -> ChannelParams:
    return ChannelParams(**DEFAULT_CHANNEL)


@dataclass(frozen=True)
class SimConfig:
    """Full description of one simulation run.

    ``scheme`` is SP, MP, MC, NC (gated: one generation in flight) or G-NC
    (greedy injection). For NC variants ``decode_rule`` is ``"rank"``
    (decode once the received coefficients span GF(2)^k) or an integer
    count of coded packets. ``flow_rate=None`` means an infinitely
    backlogged source. ``window`` caps how many units (packets, copy sets
    or generations) may be in flight between source and destination.
    """

    topology: Topology
    scheme: str = "SP"
    generation_size: int = 2
    decode_rule: object = "rank"
    source_tx_prob: float = 0.2
    cw: int = 7
    link_rate: float = 24e6
    packet_bytes: int = 1500
    ack_bytes: int = 40
    prop_delay: float = 1e-6
    channel: ChannelParams = field(default_factory=default_channel)
    flow_rate: float | None = 9e6
    stop_after: int = 2000
    seed: int = 0
    window: int | None = None
    forced_errors: tuple | None = None
    slot_cap: int = 10**8
    queue_capacity: int = 50
    sp_path: int | None = None
    strict: bool = False
    label: str | None = None

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise ValueError(f"unknown scheme {self.scheme!r}; expected one of {SCHEMES}")
        if not 0.0 < self.source_tx_prob <= 1.0:
            raise ValueError(f"source_tx_prob must lie in (0, 1], got {self.source_tx_prob}")
        if self.cw < 0:
            raise ValueError("cw must be >= 0")
        if self.stop_after < 1:
            raise ValueError("stop_after must be >= 1")
        if self.window is not None and self.window < 1:
            raise ValueError("window must be >= 1")
        if self.flow_rate is not None and self.flow_rate <= 0:
            raise ValueError("flow_rate must be positive (or None for a saturated source)")
        if self.is_nc:
            k = self.generation_size
            if not 1 <= k <= netcode.MAX_K:
                raise ValueError(f"generation size {k} out of range")
            if self.strict and (1 << k) - 1 != self.topology.n:
                raise ValueError(f"strict mode needs n = 2^k - 1 paths: k={k} gives {(1 << k) - 1}, "
                                 f"topology has {self.topology.n}")
            rule = self.decode_rule
            if rule != "rank" and not (isinstance(rule, int) and 1 <= rule <= self.topology.n):
                raise ValueError(f"decode_rule must be 'rank' or a count in [1, n], got {rule!r}")
        if self.forced_errors is not None:
            errs = self.forced_errors
            if len(errs) != self.topology.n:
                raise ValueError(f"forced_errors needs one probability per path ({self.topology.n})")
            if any(not 0.0 <= e < 1.0 for e in errs):
                raise ValueError("forced error probabilities must lie in [0, 1)")

    @property
    def is_nc(self) -> bool:
        return self.scheme in ("NC", "G-NC")

    @property
    def slot_time(self) -> float:
        """``T_data + T_ack + 2 D_prop`` in seconds."""
        return (8 * self.packet_bytes + 8 * self.ack_bytes) / self.link_rate + 2 * self.prop_delay

    @property
    def name(self) -> str:
        return self.label or self.scheme


def forced_error_mode(config: SimConfig, e) -> SimConfig:
    """Replace SINR reception by independent per-hop erasures.

    ``e`` is one probability for every hop or a sequence with one entry per
    path. Interference is ignored in this mode.
    """
    n = config.topology.n
    errs = tuple(float(x) for x in e) if isinstance(e, Sequence) else (float(e),) * n
    return replace(config, forced_errors=errs)


def scheme_from_label(label: str, generation_size: int | None = None) -> dict:
    """Map a table label (``NC-L``, ``G-NC-U``, ...) to SimConfig fields."""
    base = label
    bound = None
    if label.endswith("-L") or label.endswith("-U"):
        base, bound = label[:-2], label[-1]
    if base not in SCHEMES:
        raise ValueError(f"unknown scheme label {label!r}")
    fields = {"scheme": base, "label": label}
    if base in ("NC", "G-NC"):
        k = generation_size or 2
        fields["generation_size"] = k
        if bound is not None:
            lo, hi = netcode.decode_bounds(k)
            fields["decode_rule"] = lo if bound == "L" else hi
    elif bound is not None:
        raise ValueError(f"bound suffix only applies to NC schemes: {label!r}")
    return fields


@dataclass
class SimMetrics:
    """Measured outputs of one run. Times are in seconds unless suffixed ``_slots``."""

    scheme: str
    mean_delay: float
    mean_delay_slots: float
    delay_stderr_slots: float
    delay_samples: int
    throughput: float
    mean_interarrival: float | None
    pkt_drops: int
    drop_causes: dict
    drops_by_hop: dict
    queue_occupation: dict
    mean_queue_length: dict
    slots_elapsed: int
    slot_time: float
    delivered_packets: int
    units_created: int
    units_delivered: int
    units_in_queue: int
    units_purged: int
    timed_out: bool = False

    @property
    def delay_stderr(self) -> float:
        return self.delay_stderr_slots * self.slot_time

    @property
    def elapsed(self) -> float:
        return self.slots_elapsed * self.slot_time

    def as_dict(self) -> dict:
        out = dict(self.__dict__)
        out["delay_stderr"] = self.delay_stderr
        return {k: (None if isinstance(v, float) and math.isnan(v) else v) for k, v in out.items()}


class SimulationTimeout(RuntimeError):
    def __init__(self, metrics: SimMetrics):
        super().__init__(f"slot cap reached after {metrics.slots_elapsed} slots "
                         f"({metrics.delivered_packets} packets delivered)")
        self.metrics = metrics

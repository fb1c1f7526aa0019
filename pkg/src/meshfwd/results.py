from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Mapping


@dataclass(frozen=True)
class SchemeResult:
    """Delay/throughput pair for one forwarding scheme.

    ``packets`` is the number of data packets delivered per ``delay``
    interval, so ``throughput == packets / delay``. An unreachable
    configuration (some required link always fails) carries an infinite
    delay and zero throughput instead of raising.
    """

    scheme: str
    delay: float
    throughput: float
    packets: float = 1.0
    delay_ratio_to_sp: float | None = None
    throughput_ratio_to_sp: float | None = None
    extras: dict = field(default_factory=dict)

    @classmethod
    def from_delay(cls, scheme: str, delay: float, packets: float = 1.0, **extras) -> "SchemeResult":
        if not math.isfinite(delay) or delay <= 0:
            return cls(scheme, math.inf, 0.0, packets, extras=dict(extras))
        return cls(scheme, delay, packets / delay, packets, extras=dict(extras))

    @classmethod
    def unreachable(cls, scheme: str, packets: float = 1.0, **extras) -> "SchemeResult":
        return cls(scheme, math.inf, 0.0, packets, extras=dict(extras))

    @property
    def reachable(self) -> bool:
        return math.isfinite(self.delay)

    def with_ratios(self, sp: "SchemeResult") -> "SchemeResult":
        return replace(
            self,
            delay_ratio_to_sp=_ratio(self.delay, sp.delay),
            throughput_ratio_to_sp=_ratio(self.throughput, sp.throughput),
        )

    def scaled(self, factor: float) -> "SchemeResult":
        """Same scheme with every delay multiplied by ``factor``."""
        extras = {k: (v * factor if k.endswith("_delay") else v) for k, v in self.extras.items()}
        out = SchemeResult.from_delay(self.scheme, self.delay * factor, self.packets, **extras)
        return out


def _ratio(a: float, b: float) -> float:
    if b == 0 or not math.isfinite(b):
        return math.nan
    return a / b


def attach_ratios(results: Mapping[str, SchemeResult], reference: str = "SP") -> dict[str, SchemeResult]:
    """Fill in ratios to the reference scheme (SP by default)."""
    if reference not in results:
        raise KeyError(f"reference scheme {reference!r} missing from results")
    sp = results[reference]
    return {name: r.with_ratios(sp) for name, r in results.items()}

"""Analytic and simulated delay/throughput of multipath forwarding schemes.

Schemes: single path (SP), multipath (MP), multicopy (MC) and GF(2) network
coding (NC). Engines: closed forms, an absorbing Markov chain, and a
slot-level slotted-aloha simulator.
"""

from meshfwd.results import SchemeResult, attach_ratios

__version__ = "0.1.0"

__all__ = ["SchemeResult", "attach_ratios", "__version__"]

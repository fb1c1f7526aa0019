from meshfwd.simulator.config import (
    SCHEMES,
    SimConfig,
    SimMetrics,
    SimulationTimeout,
    default_channel,
    forced_error_mode,
    scheme_from_label,
)
from meshfwd.simulator.engine import run
from meshfwd.simulator.topology import Topology, build_grid_topology, outer_first_link_length

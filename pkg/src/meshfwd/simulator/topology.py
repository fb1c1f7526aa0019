from __future__ import annotations

from dataclasses import dataclass

from meshfwd.channel import NodePosition


@dataclass(frozen=True)
class Topology:
    """Grid of ``n`` parallel paths with ``m`` hops each.

    Node ids: source interfaces ``0..n-1`` (one per path, co-located at the
    source), then relays path by path, then one destination interface per
    path (co-located at the destination). ``routes[i]`` lists the node ids
    a packet on path ``i`` visits.
    """

    n: int
    m: int
    d_h: float
    d_v: float
    positions: dict
    routes: tuple
    labels: dict

    @property
    def node_count(self) -> int:
        return len(self.positions)

    @property
    def source_interfaces(self) -> tuple:
        return tuple(r[0] for r in self.routes)

    @property
    def destination_interfaces(self) -> tuple:
        return tuple(r[-1] for r in self.routes)

    @property
    def relays(self) -> tuple:
        return tuple(node for r in self.routes for node in r[1:-1])

    def path_length(self, path: int) -> float:
        route = self.routes[path]
        return sum(self.positions[a].distance(self.positions[b]) for a, b in zip(route, route[1:]))

    def shortest_path(self) -> int:
        lengths = [self.path_length(i) for i in range(self.n)]
        return min(range(self.n), key=lambda i: (round(lengths[i], 9), i))

    def link_length(self, path: int, hop: int) -> float:
        """Length of hop ``hop`` (0-based) on ``path``."""
        route = self.routes[path]
        return self.positions[route[hop]].distance(self.positions[route[hop + 1]])


def build_grid_topology(n: int, m: int, d_h: float, d_v: float = 0.0) -> Topology:
    if n < 1 or m < 1:
        raise ValueError(f"need n >= 1 and m >= 1, got n={n}, m={m}")
    if d_h <= 0 or (n > 1 and m > 1 and d_v <= 0):
        raise ValueError("distances must be positive")
    source = NodePosition(0.0, 0.0)
    dest = NodePosition(m * d_h, 0.0)
    positions: dict[int, NodePosition] = {}
    labels: dict[int, str] = {}
    for i in range(n):
        positions[i] = source
        labels[i] = f"S{i}"
    next_id = n
    relay_ids = []
    for i in range(n):
        y = (i - (n - 1) / 2) * d_v
        ids = []
        for j in range(1, m):
            positions[next_id] = NodePosition(j * d_h, y)
            labels[next_id] = f"R{i}.{j}"
            ids.append(next_id)
            next_id += 1
        relay_ids.append(ids)
    routes = []
    for i in range(n):
        positions[next_id] = dest
        labels[next_id] = f"D{i}"
        routes.append(tuple([i, *relay_ids[i], next_id]))
        next_id += 1
    return Topology(n, m, float(d_h), float(d_v), positions, tuple(routes), labels)


def outer_first_link_length(topology: Topology) -> float:
    return topology.link_length(0, 0)


"""Slot-level slotted-aloha simulator.

Per slot: traffic arrives at the source interfaces; sources transmit their
head packet with ``source_tx_prob``, relays after a uniform backoff in
``[0, cw]``; every intended receiver samples Rayleigh fading for all
concurrent transmitters and accepts iff the SINR clears its threshold.
Receivers take at most one packet per slot and nodes are half-duplex.
Acknowledgements (local and global) are instantaneous and error-free, so a
failed packet simply stays at the head of its queue.

Randomness comes from one ``SeedSequence``: each transmitter owns a PCG64
stream for its MAC decisions and a separate stream feeds the channel. All
doubles are built from raw 64-bit PCG64 output, which keeps runs
bit-identical across numpy versions.
"""
from __future__ import annotations

import math
from collections import deque

import numpy as np

from meshfwd import netcode
from meshfwd.channel import received_power_factor
from meshfwd.simulator.config import SimConfig, SimMetrics, SimulationTimeout

_TWO_POW_M53 = 2.0**-53


def _uniforms(bitgen: np.random.PCG64, count: int) -> np.ndarray:
    raw = bitgen.random_raw(count)
    return (raw >> np.uint64(11)).astype(np.float64) * _TWO_POW_M53


class _Stream:
    """Scalar uniform draws, buffered."""

    __slots__ = ("_bg", "_buf", "_pos")

    def __init__(self, seed_seq: np.random.SeedSequence):
        self._bg = np.random.PCG64(seed_seq)
        self._buf: list = []
        self._pos = 0

    def random(self) -> float:
        if self._pos >= len(self._buf):
            self._buf = _uniforms(self._bg, 1024).tolist()
            self._pos = 0
        u = self._buf[self._pos]
        self._pos += 1
        return u


class _BlockStream:
    """Vector uniform draws, buffered."""

    def __init__(self, seed_seq: np.random.SeedSequence, block: int = 1 << 16):
        self._bg = np.random.PCG64(seed_seq)
        self._block = block
        self._buf = np.empty(0)
        self._pos = 0

    def take(self, count: int) -> np.ndarray:
        if self._pos + count > len(self._buf):
            self._buf = np.concatenate([self._buf[self._pos:], _uniforms(self._bg, max(self._block, count))])
            self._pos = 0
        out = self._buf[self._pos:self._pos + count]
        self._pos += count
        return out


class _Packet:
    __slots__ = ("path", "unit", "coeff", "dequeued", "holder", "purged")

    def __init__(self, path, unit, holder, coeff=None):
        self.path = path
        self.unit = unit
        self.coeff = coeff
        self.dequeued = None
        self.holder = holder
        self.purged = False


class _Generation:
    __slots__ = ("id", "packets", "received", "dequeued", "decoded")

    def __init__(self, gid):
        self.id = gid
        self.packets = []
        self.received = []
        self.dequeued = None
        self.decoded = False


class _Run:
    def __init__(self, cfg: SimConfig):
        self.cfg = cfg
        topo = cfg.topology
        self.topo = topo
        self.n = topo.n
        N = topo.node_count
        self.sources = list(topo.source_interfaces)
        self.dests = set(topo.destination_interfaces)
        self.relays = list(topo.relays)
        self.next_hop = {}
        self.hop_of = {}
        self.path_of = {}
        for p, route in enumerate(topo.routes):
            for h, node in enumerate(route):
                self.path_of[node] = p
                self.hop_of[node] = h
                if h + 1 < len(route):
                    self.next_hop[node] = route[h + 1]

        ch = cfg.channel
        vg = np.zeros((N, N))
        for i in range(N):
            for j in range(N):
                if i != j and topo.positions[i].distance(topo.positions[j]) > 0:
                    vg[i, j] = ch.fading(i, j) * received_power_factor(i, j, ch, topo.positions)
        self.vg = vg
        self.gamma = np.array([ch.gamma_of(j) for j in range(N)])
        self.eta = np.array([ch.eta_of(j) for j in range(N)])
        self.forced = None if cfg.forced_errors is None else np.array(
            [cfg.forced_errors[self.path_of[j]] for j in range(N)])

        children = np.random.SeedSequence(cfg.seed).spawn(N + 1)
        self.mac = [_Stream(children[i]) for i in range(N)]
        self.chan = _BlockStream(children[N])

        self.queues = [deque() for _ in range(N)]
        self.live = [0] * N
        self.qsum = [0] * N
        self.backoff = [None] * N

        self.sp_path = cfg.sp_path if cfg.sp_path is not None else topo.shortest_path()
        self.active_paths = [self.sp_path] if cfg.scheme == "SP" else list(range(self.n))
        self.active_sources = [self.sources[p] for p in self.active_paths]

        self.lam = None
        if cfg.flow_rate is not None:
            self.lam = cfg.flow_rate * cfg.slot_time / (8 * cfg.packet_bytes)
        self.credit = 0.0
        self.seq = 0

        self.unit_path = {}
        self.inflight_units = set()
        self.scope_count = {}
        self.unit_dequeued = {}
        self.unit_packets = {}
        self.delivered_units = set()
        self.to_purge = []

        k = cfg.generation_size
        self.coeffs = [c.bits for c in netcode.enumerate_coefficients(k)] if cfg.is_nc else []
        self.gens = {}
        self.gated_backlog = deque()
        self.active_gen = None
        self.pending_data = 0

        self.delays = []
        self.delivered = 0
        self.rx_slots_count = 0
        self.last_rx_slot = None
        self.sum_gaps = 0
        self.drops = 0
        self.drop_causes = {"snr": 0, "interference": 0, "busy": 0, "capacity": 0, "erasure": 0}
        self.drops_by_hop = {}
        self.created = 0
        self.units_delivered = 0
        self.purged = 0

    # ---- traffic ---------------------------------------------------------

    def _scope(self, unit):
        if self.cfg.scheme in ("SP", "MP"):
            return ("path", self.unit_path[unit])
        return "all"

    def _enqueue(self, path, unit, coeff=None):
        src = self.sources[path]
        pkt = _Packet(path, unit, src, coeff)
        self.queues[src].append(pkt)
        self.live[src] += 1
        self.created += 1
        self.unit_packets.setdefault(unit, []).append(pkt)
        return pkt

    def _new_data(self):
        scheme = self.cfg.scheme
        seq = self.seq
        self.seq += 1
        if scheme == "SP":
            self.unit_path[seq] = self.sp_path
            self._enqueue(self.sp_path, seq)
        elif scheme == "MP":
            path = seq % self.n
            self.unit_path[seq] = path
            self._enqueue(path, seq)
        elif scheme == "MC":
            for p in range(self.n):
                self._enqueue(p, seq)
        else:
            self.pending_data += 1
            if self.pending_data == self.cfg.generation_size:
                self.pending_data = 0
                gid = len(self.gens)
                self.gens[gid] = _Generation(gid)
                if scheme == "G-NC":
                    self._release(gid)
                else:
                    self.gated_backlog.append(gid)

    def _release(self, gid):
        gen = self.gens[gid]
        for p in range(self.n):
            gen.packets.append(self._enqueue(p, gid, self.coeffs[p % len(self.coeffs)]))
        if self.cfg.scheme == "NC":
            self.active_gen = gid

    def _new_unit_for(self, path):
        """Saturated source: one fresh data packet on ``path``."""
        seq = self.seq
        self.seq += 1
        self.unit_path[seq] = path
        self._enqueue(path, seq)

    def _arrivals(self):
        cfg = self.cfg
        scheme = cfg.scheme
        if self.lam is None:
            if scheme in ("SP", "MP"):
                for p in self.active_paths:
                    if self.live[self.sources[p]] == 0:
                        self._new_unit_for(p)
            elif scheme == "MC":
                if all(self.live[s] == 0 for s in self.sources):
                    seq = self.seq
                    self.seq += 1
                    for p in range(self.n):
                        self._enqueue(p, seq)
            elif scheme == "NC":
                if self.active_gen is None:
                    gid = len(self.gens)
                    self.gens[gid] = _Generation(gid)
                    self._release(gid)
            elif all(self.live[s] == 0 for s in self.sources):
                gid = len(self.gens)
                self.gens[gid] = _Generation(gid)
                self._release(gid)
            return
        self.credit += self.lam
        while self.credit >= 1.0:
            self.credit -= 1.0
            self._new_data()
        if scheme == "NC" and self.active_gen is None and self.gated_backlog:
            self._release(self.gated_backlog.popleft())

    # ---- MAC -------------------------------------------------------------

    def _head(self, node):
        q = self.queues[node]
        while q and q[0].purged:
            q.popleft()
        return q[0] if q else None

    def _may_start(self, pkt):
        window = self.cfg.window
        if window is None or pkt.unit in self.inflight_units:
            return True
        return self.scope_count.get(self._scope(pkt.unit), 0) < window

    def _mac(self, slot):
        txs = []
        p_tx = self.cfg.source_tx_prob
        for s in self.active_sources:
            head = self._head(s)
            if head is None:
                continue
            if head.dequeued is None and not self._may_start(head):
                continue
            if p_tx < 1.0 and self.mac[s].random() >= p_tx:
                continue
            if head.dequeued is None:
                head.dequeued = slot
                if head.unit not in self.inflight_units and head.unit not in self.delivered_units:
                    self.inflight_units.add(head.unit)
                    scope = self._scope(head.unit)
                    self.scope_count[scope] = self.scope_count.get(scope, 0) + 1
                    self.unit_dequeued[head.unit] = slot
            txs.append((s, head))
        cw = self.cfg.cw
        for r in self.relays:
            head = self._head(r)
            if head is None:
                self.backoff[r] = None
                continue
            b = self.backoff[r]
            if b is None:
                b = int(self.mac[r].random() * (cw + 1)) if cw > 0 else 0
            if b == 0:
                txs.append((r, head))
                self.backoff[r] = None
            else:
                self.backoff[r] = b - 1
        return txs

    # ---- channel ---------------------------------------------------------

    def _receptions(self, txs):
        """Per transmission: (success, score, cause-if-failed)."""
        tx = [t for t, _ in txs]
        rx = [self.next_hop[t] for t in tx]
        on_air = set(tx)
        count = len(tx)
        if self.forced is not None:
            u = self.chan.take(count)
            ok = u >= self.forced[rx]
            score = u
            causes = ["erasure"] * count
        else:
            a = -np.log1p(-self.chan.take(count * count)).reshape(count, count)
            power = a * self.vg[np.ix_(tx, rx)]
            signal = power.diagonal()
            interference = np.maximum(power.sum(axis=0) - signal, 0.0)
            eta = self.eta[rx]
            gamma = self.gamma[rx]
            score = signal / (eta + interference) if count > 1 or eta[0] > 0 else np.full(count, np.inf)
            ok = score >= gamma
            noise_limited = signal < gamma * eta
            causes = ["snr" if nl else "interference" for nl in noise_limited.tolist()]
        ok = ok.tolist()
        score = score.tolist()
        for idx, r in enumerate(rx):
            if r in on_air:
                ok[idx] = False
                causes[idx] = "busy"
        # one packet per receiver per slot: keep the strongest
        best = {}
        for idx, r in enumerate(rx):
            if ok[idx]:
                cur = best.get(r)
                if cur is None or score[idx] > score[cur]:
                    best[r] = idx
        for idx, r in enumerate(rx):
            if ok[idx] and best[r] != idx:
                ok[idx] = False
                causes[idx] = "capacity"
        return rx, ok, causes

    def _step(self, slot, txs):
        rx, ok, causes = self._receptions(txs)
        for (t, pkt), r, good, cause in zip(txs, rx, ok, causes):
            if good:
                self.queues[t].popleft()
                self.live[t] -= 1
                if r in self.dests:
                    pkt.holder = None
                    self._deliver(slot, pkt)
                else:
                    pkt.holder = r
                    self.queues[r].append(pkt)
                    self.live[r] += 1
            else:
                self.drops += 1
                self.drop_causes[cause] += 1
                key = f"p{pkt.path}h{self.hop_of[t]}"
                per = self.drops_by_hop.setdefault(key, {})
                per[cause] = per.get(cause, 0) + 1

    def _finish_unit(self, unit, slot):
        self.delays.append(slot - self.unit_dequeued[unit] + 1)
        self.inflight_units.discard(unit)
        self.delivered_units.add(unit)
        scope = self._scope(unit)
        self.scope_count[scope] -= 1

    def _deliver(self, slot, pkt):
        self.units_delivered += 1
        scheme = self.cfg.scheme
        unit = pkt.unit
        if scheme in ("SP", "MP"):
            self._finish_unit(unit, slot)
            self.delivered += 1
            del self.unit_packets[unit]
            return
        if scheme == "MC":
            if unit in self.delivered_units:
                return
            self._finish_unit(unit, slot)
            self.delivered += 1
            self.to_purge.append(unit)
            return
        if self.last_rx_slot is not None:
            self.sum_gaps += slot - self.last_rx_slot
            self.rx_slots_count += 1
        self.last_rx_slot = slot
        gen = self.gens[unit]
        if gen.decoded:
            return
        gen.received.append(pkt.coeff)
        rule = self.cfg.decode_rule
        k = self.cfg.generation_size
        done = (netcode.gf2_rank(gen.received) == k) if rule == "rank" else len(gen.received) >= rule
        if done:
            gen.decoded = True
            self._finish_unit(unit, slot)
            self.delivered += k
            self.to_purge.append(unit)
            if scheme == "NC":
                self.active_gen = None

    def _global_ack(self):
        for unit in self.to_purge:
            for pkt in self.unit_packets.pop(unit, ()):
                if pkt.holder is not None and not pkt.purged:
                    pkt.purged = True
                    self.live[pkt.holder] -= 1
                    self.purged += 1
            if self.cfg.is_nc:
                self.gens[unit].packets = []
        self.to_purge.clear()

    # ---- driver ----------------------------------------------------------

    def run(self) -> SimMetrics:
        cfg = self.cfg
        transmitters = self.sources + self.relays
        slot = -1
        for slot in range(cfg.slot_cap):
            self._arrivals()
            txs = self._mac(slot)
            if txs:
                self._step(slot, txs)
            if self.to_purge:
                self._global_ack()
            for node in transmitters:
                self.qsum[node] += self.live[node]
            if self.delivered >= cfg.stop_after:
                return self._metrics(slot + 1)
        raise SimulationTimeout(self._metrics(slot + 1, timed_out=True))

    def _metrics(self, slots, timed_out=False) -> SimMetrics:
        cfg = self.cfg
        t_slot = cfg.slot_time
        d = np.asarray(self.delays, dtype=float)
        mean = float(d.mean()) if d.size else math.nan
        se = float(d.std(ddof=1) / math.sqrt(d.size)) if d.size > 1 else math.nan
        interarrival = None
        if cfg.is_nc and self.rx_slots_count:
            interarrival = self.sum_gaps / self.rx_slots_count * t_slot
        labels = self.topo.labels
        transmitters = self.sources + self.relays
        mean_q = {labels[n]: self.qsum[n] / slots for n in transmitters if slots}
        return SimMetrics(
            scheme=cfg.name,
            mean_delay=mean * t_slot,
            mean_delay_slots=mean,
            delay_stderr_slots=se,
            delay_samples=int(d.size),
            throughput=self.delivered * 8 * cfg.packet_bytes / (slots * t_slot) if slots else 0.0,
            mean_interarrival=interarrival,
            pkt_drops=self.drops,
            drop_causes=dict(self.drop_causes),
            drops_by_hop={k: dict(v) for k, v in sorted(self.drops_by_hop.items())},
            queue_occupation={k: v / cfg.queue_capacity for k, v in mean_q.items()},
            mean_queue_length=mean_q,
            slots_elapsed=slots,
            slot_time=t_slot,
            delivered_packets=self.delivered,
            units_created=self.created,
            units_delivered=self.units_delivered,
            units_in_queue=sum(self.live),
            units_purged=self.purged,
            timed_out=timed_out,
        )


def run(config: SimConfig) -> SimMetrics:
    """Simulate ``config`` until ``stop_after`` data packets are delivered (or decoded)."""
    return _Run(config).run()

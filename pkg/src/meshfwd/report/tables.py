"""Comparison tables, rank comparisons and parameter sweeps."""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field

import numpy as np

from meshfwd import closedform, markov
from meshfwd.channel import ChannelParams, NodePosition
from meshfwd.report.scenario import Scenario, ScenarioError
from meshfwd.simulator import SimConfig, build_grid_topology, forced_error_mode, run, scheme_from_label

FLOAT_FMT = "%.9g"
CSV_COLUMNS = ("scenario", "scheme", "delay", "throughput", "delay_ratio_to_sp", "throughput_ratio_to_sp")


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, float):
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return FLOAT_FMT % x
    return str(x)


def _ratio(num, den):
    if den is None or num is None or den == 0 or not math.isfinite(den):
        return math.nan
    return num / den


@dataclass
class TableRow:
    scheme: str
    delay: float
    throughput: float
    delay_ratio: float = math.nan
    throughput_ratio: float = math.nan
    extras: dict = field(default_factory=dict)
    error: str | None = None


@dataclass
class ComparisonTable:
    name: str
    engine: str
    rows: list
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.recompute_ratios()

    def recompute_ratios(self):
        sp = self.get("SP")
        for row in self.rows:
            if sp is None or row.error or sp.error:
                continue
            row.delay_ratio = _ratio(row.delay, sp.delay)
            row.throughput_ratio = _ratio(row.throughput, sp.throughput)
            if row.scheme == "SP":
                row.delay_ratio = row.throughput_ratio = 1.0

    def get(self, scheme):
        for row in self.rows:
            if row.scheme == scheme:
                return row
        return None

    def __getitem__(self, scheme) -> TableRow:
        row = self.get(scheme)
        if row is None:
            raise KeyError(scheme)
        return row

    @property
    def schemes(self) -> list:
        return [r.scheme for r in self.rows]

    def csv_rows(self):
        for r in self.rows:
            yield [self.name, r.scheme, _fmt(r.delay), _fmt(r.throughput), _fmt(r.delay_ratio),
                   _fmt(r.throughput_ratio)]

    def to_csv(self) -> str:
        return _write_csv(CSV_COLUMNS, self.csv_rows())

    def to_dict(self) -> dict:
        def clean(x):
            if isinstance(x, float) and not math.isfinite(x):
                return None
            if isinstance(x, dict):
                return {k: clean(v) for k, v in x.items()}
            if isinstance(x, (list, tuple)):
                return [clean(v) for v in x]
            return x
        return {
            "name": self.name,
            "engine": self.engine,
            "metadata": clean(self.metadata),
            "rows": [clean({"scheme": r.scheme, "delay": r.delay, "throughput": r.throughput,
                            "delay_ratio_to_sp": r.delay_ratio, "throughput_ratio_to_sp": r.throughput_ratio,
                            "extras": r.extras, "error": r.error}) for r in self.rows],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def to_text(self) -> str:
        units = self.metadata.get("units", {})
        head = ["scheme", f"delay [{units.get('delay', '')}]", f"throughput [{units.get('throughput', '')}]",
                "delay/SP", "thr/SP"]
        body = []
        for r in self.rows:
            if r.error:
                body.append([r.scheme, "error: " + r.error, "", "", ""])
            else:
                body.append([r.scheme, "%.6g" % r.delay, "%.6g" % r.throughput,
                             "%.4f" % r.delay_ratio, "%.4f" % r.throughput_ratio])
        widths = [max(len(x[i]) for x in [head] + body) for i in range(len(head))]
        lines = [f"{self.name} ({self.engine})"]
        for line in [head] + body:
            lines.append("  ".join(c.ljust(w) for c, w in zip(line, widths)).rstrip())
        return "\n".join(lines) + "\n"


def _write_csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


# ---- engines -------------------------------------------------------------

def _from_results(s: Scenario, results: dict, metadata: dict) -> ComparisonTable:
    rows = []
    for scheme in s.schemes:
        res = results.get(scheme)
        if res is None:
            rows.append(TableRow(scheme, math.nan, math.nan, error="scheme not offered by this engine"))
            continue
        rows.append(TableRow(scheme, res.delay, res.throughput, extras=dict(res.extras, packets=res.packets)))
    metadata.setdefault("units", {"delay": "slots", "throughput": "packets/slot"})
    return ComparisonTable(s.name, s.engine, rows, metadata)


def _markov(s: Scenario) -> ComparisonTable:
    rows = []
    n, m, e, k = s.get("n"), s.get("m"), s.get("e"), s.get("k")
    for scheme in s.schemes:
        try:
            res = markov.scheme_delay_throughput(scheme, n, m, e, k_data=k, strict=s.strict)
            rows.append(TableRow(scheme, res.delay, res.throughput, extras=dict(res.extras, packets=res.packets)))
        except ValueError as exc:
            rows.append(TableRow(scheme, math.nan, math.nan, error=str(exc)))
    return ComparisonTable(s.name, s.engine, rows, {
        "parameters": {"n": n, "m": m, "e": e, "k": k},
        "units": {"delay": "slots", "throughput": "packets/slot"}})


def _hbh(s: Scenario) -> ComparisonTable:
    e = s.get("e")
    results = closedform.hopbyhop_three(e) if s.get("n") == 3 else closedform.hopbyhop_seven(e)
    hops = s.get("hops", 1)
    if hops > 1:
        results = {k: closedform.extend_hops(v, hops) for k, v in results.items()}
    return _from_results(s, results, {"parameters": {"n": s.get("n"), "e": e, "hops": hops}})


def _hetero(s: Scenario) -> ComparisonTable:
    e1, e2, e3 = s.get("e")
    return _from_results(s, closedform.hetero_three(e1, e2, e3), {"parameters": {"e": [e1, e2, e3]}})


def _sinr(s: Scenario) -> ComparisonTable:
    if "conditional_errors" in s.params:
        table = closedform.ConditionalErrorTable()
        for entry in s.get("conditional_errors"):
            table.set(entry["link"], entry["active"], entry["e"])
        params = {"conditional_errors": s.get("conditional_errors")}
    else:
        ch = ChannelParams(**s.get("channel", {}))
        positions, links = {}, {}
        for idx, spec in sorted(s.get("links").items()):
            tx, rx = 2 * int(idx) - 2, 2 * int(idx) - 1
            positions[tx] = NodePosition(*spec["tx"])
            positions[rx] = NodePosition(*spec["rx"])
            links[int(idx)] = (tx, rx)
        table = closedform.ConditionalErrorTable.from_channel(links, ch, positions)
        params = {"links": s.get("links"), "channel": s.get("channel", {})}
    return _from_results(s, closedform.sinr_three_path(table), {"parameters": params})


def sim_config(s: Scenario, label: str, seed: int) -> SimConfig:
    sim = dict(s.get("sim", {}))
    n, m = s.get("n"), s.get("m")
    topo = build_grid_topology(n, m, sim.pop("d_h", 40.0), sim.pop("d_v", 0.0 if n == 1 or m == 1 else 40.0))
    forced = sim.pop("forced_error", None)
    fields = scheme_from_label(label, s.get("k"))
    kwargs = {}
    if "channel" in s.params:
        kwargs["channel"] = ChannelParams(**s.get("channel"))
    cfg = SimConfig(topology=topo, seed=seed, strict=s.strict, **fields, **sim, **kwargs)
    if forced is not None:
        cfg = forced_error_mode(cfg, forced)
    return cfg


def _rep_seeds(s: Scenario) -> list:
    return [s.seed + r for r in range(s.reps)]


def _mean_se(values):
    a = np.asarray(values, dtype=float)
    if a.size == 0:
        return math.nan, math.nan
    se = float(a.std(ddof=1) / math.sqrt(a.size)) if a.size > 1 else math.nan
    return float(a.mean()), se


def _simulate(s: Scenario, jobs: int = 1) -> ComparisonTable:
    labels = list(s.schemes)
    seeds = _rep_seeds(s)
    configs = {}
    errors = {}
    for label in labels:
        try:
            configs[label] = [sim_config(s, label, seed) for seed in seeds]
        except ValueError as exc:
            errors[label] = str(exc)
    runnable = [cfg for label in labels if label not in errors for cfg in configs[label]]
    if jobs > 1 and len(runnable) > 1:
        from concurrent.futures import ProcessPoolExecutor
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            metrics = list(ex.map(run, runnable))
    else:
        metrics = [run(cfg) for cfg in runnable]
    it = iter(metrics)
    rows = []
    for label in labels:
        if label in errors:
            rows.append(TableRow(label, math.nan, math.nan, error=errors[label]))
            continue
        runs = [next(it) for _ in seeds]
        delay, delay_se = _mean_se([r.mean_delay for r in runs])
        thr, thr_se = _mean_se([r.throughput for r in runs])
        drops, _ = _mean_se([r.pkt_drops for r in runs])
        extras = {"delay_se": delay_se, "throughput_se": thr_se, "pkt_drops": drops,
                  "per_seed_delay": [r.mean_delay for r in runs],
                  "per_seed_throughput": [r.throughput for r in runs],
                  "per_seed_drops": [r.pkt_drops for r in runs]}
        inter = [r.mean_interarrival for r in runs if r.mean_interarrival is not None]
        if inter:
            extras["mean_interarrival"] = _mean_se(inter)[0]
        rows.append(TableRow(label, delay, thr, extras=extras))
    return ComparisonTable(s.name, s.engine, rows, {
        "parameters": {"n": s.get("n"), "m": s.get("m"), "k": s.get("k"), "sim": s.get("sim", {})},
        "seeds": seeds,
        "units": {"delay": "s", "throughput": "bit/s"}})


_ENGINES = {
    "markov": _markov,
    "closedform-hbh": _hbh,
    "closedform-hetero": _hetero,
    "closedform-sinr": _sinr,
}


def run_scenario(s: Scenario, jobs: int = 1) -> ComparisonTable:
    """Evaluate every scheme of ``s``; simulations average over ``s.reps`` seeds."""
    if s.engine == "simulate":
        return _simulate(s, jobs)
    return _ENGINES[s.engine](s)


# ---- ranks ---------------------------------------------------------------

@dataclass
class RankComparison:
    schemes: list
    delay_ranks: dict  # source name -> {scheme: rank}
    throughput_ranks: dict
    ties: dict  # source name -> list of tied scheme groups
    agreement: dict  # scheme -> {"delay": bool, "throughput": bool}
    displacement: dict  # scheme -> total absolute rank displacement
    most_divergent: str | None

    @property
    def disagreements(self) -> int:
        return sum((not a["delay"]) + (not a["throughput"]) for a in self.agreement.values())

    def to_csv(self) -> str:
        header = ("scheme", "analytic_delay_rank", "simulated_delay_rank", "analytic_throughput_rank",
                  "simulated_throughput_rank", "delay_agrees", "throughput_agrees", "displacement")
        rows = []
        for s in self.schemes:
            rows.append([s, self.delay_ranks["analytic"][s], self.delay_ranks["simulated"][s],
                         self.throughput_ranks["analytic"][s], self.throughput_ranks["simulated"][s],
                         int(self.agreement[s]["delay"]), int(self.agreement[s]["throughput"]),
                         self.displacement[s]])
        return _write_csv(header, rows)


def _ranks(values: dict, descending: bool):
    order = sorted(values, key=lambda s: ((-values[s] if descending else values[s]), s))
    ranks = {s: i + 1 for i, s in enumerate(order)}
    ties = []
    for s in order:
        group = sorted(t for t in order if math.isclose(values[t], values[s], rel_tol=1e-9, abs_tol=0.0))
        if len(group) > 1 and group not in ties:
            ties.append(group)
    return ranks, ties


def rank_table(analytic: ComparisonTable, simulated: ComparisonTable) -> RankComparison:
    """Order the common schemes by delay (ascending) and throughput (descending) in both tables.

    Ties are broken by scheme name and reported in ``ties``.
    """
    ok_a = {r.scheme for r in analytic.rows if not r.error}
    ok_s = {r.scheme for r in simulated.rows if not r.error}
    common = sorted(ok_a & ok_s)
    if not common:
        raise ValueError("the two tables share no schemes")
    sources = {"analytic": analytic, "simulated": simulated}
    delay_ranks, thr_ranks, ties = {}, {}, {}
    for name, table in sources.items():
        d, dt = _ranks({s: table[s].delay for s in common}, descending=False)
        t, tt = _ranks({s: table[s].throughput for s in common}, descending=True)
        delay_ranks[name], thr_ranks[name] = d, t
        ties[name] = [("delay", g) for g in dt] + [("throughput", g) for g in tt]
    agreement, displacement = {}, {}
    for s in common:
        dd = abs(delay_ranks["analytic"][s] - delay_ranks["simulated"][s])
        td = abs(thr_ranks["analytic"][s] - thr_ranks["simulated"][s])
        agreement[s] = {"delay": dd == 0, "throughput": td == 0}
        displacement[s] = dd + td
    worst = max(displacement.values())
    most = None if worst == 0 else min(s for s in common if displacement[s] == worst)
    return RankComparison(common, delay_ranks, thr_ranks, ties, agreement, displacement, most)


# ---- sweeps --------------------------------------------------------------

SWEEP_AXES = ("n", "m", "k", "e", "hops", "reps", "seed")
_AXIS_ALIASES = {"paths": "n"}
SWEEP_COLUMNS = ("scenario", "scheme", "axis", "value", "delay", "throughput", "delay_ratio_to_sp",
                 "throughput_ratio_to_sp")


def _apply_axis(base: Scenario, axis: str, value) -> Scenario:
    axis = _AXIS_ALIASES.get(axis, axis)
    if axis.startswith("sim."):
        sim = dict(base.get("sim", {}))
        sim[axis[4:]] = value
        return base.replace_params(sim=sim)
    if axis in ("reps", "seed"):
        d = base.to_dict()
        d[axis] = int(value)
        from meshfwd.report.scenario import scenario_from_dict
        return scenario_from_dict(d, base.name)
    if axis in ("n", "m", "k", "hops"):
        value = int(value)
    return base.replace_params(**{axis: value})


def _check_axis(base: Scenario, axis: str):
    axis = _AXIS_ALIASES.get(axis, axis)
    if axis.startswith("sim."):
        if base.engine != "simulate":
            raise ScenarioError(f"axis {axis!r} only applies to simulate scenarios")
        return
    if axis not in SWEEP_AXES:
        raise ScenarioError(f"invalid sweep axis {axis!r}; expected one of {SWEEP_AXES} or sim.<field>")
    if axis == "e" and isinstance(base.get("e"), list):
        raise ScenarioError("cannot sweep e when it is a per-path vector")


def sweep(base: Scenario, axis: str, values, jobs: int = 1) -> list:
    """One table per ``value``; returns ``[(value, ComparisonTable), ...]``."""
    _check_axis(base, axis)
    return [(v, run_scenario(_apply_axis(base, axis, v), jobs)) for v in values]


def sweep_csv(base: Scenario, axis: str, values, jobs: int = 1) -> str:
    rows = []
    for value, table in sweep(base, axis, values, jobs):
        for r in table.rows:
            rows.append([table.name, r.scheme, axis, _fmt(value), _fmt(r.delay), _fmt(r.throughput),
                         _fmt(r.delay_ratio), _fmt(r.throughput_ratio)])
    return _write_csv(SWEEP_COLUMNS, rows)

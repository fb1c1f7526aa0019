import json
import math

import pytest

from meshfwd.report import ScenarioError, parse_scenario, rank_table, run_scenario, scenario_from_dict, sweep_csv
from meshfwd.report.cli import fixture_dir, fixture_scenarios, main
from meshfwd.report.tables import ComparisonTable, TableRow


def markov_doc(**kw):
    doc = {"engine": "markov", "schemes": ["SP"], "n": 1, "m": 4, "e": 0.2}
    doc.update(kw)
    return doc


def test_minimal_scenario_is_valid():
    s = scenario_from_dict(markov_doc())
    assert s.engine == "markov" and s.schemes == ("SP",)
    t = run_scenario(s)
    assert t["SP"].delay == pytest.approx(5.0)


def test_strict_mode_rejects_mismatched_generation():
    with pytest.raises(ScenarioError, match="2\\^k - 1"):
        scenario_from_dict(markov_doc(schemes=["NC", "SP"], n=4, m=2, k=2, strict_paper=True))


def test_unknown_keys_rejected_with_location():
    with pytest.raises(ScenarioError, match="<root>.*bogus"):
        scenario_from_dict(markov_doc(bogus=1))
    with pytest.raises(ScenarioError, match="/sim"):
        scenario_from_dict({"engine": "simulate", "schemes": ["SP"], "n": 1, "m": 1, "sim": {"dv": 3}})


def test_missing_and_contradictory_parameters():
    with pytest.raises(ScenarioError, match="needs parameter"):
        scenario_from_dict({"engine": "markov", "schemes": ["SP"], "n": 3})
    with pytest.raises(ScenarioError):
        scenario_from_dict({"engine": "closedform-hetero", "schemes": ["SP"], "e": [0.1, 0.2]})
    with pytest.raises(ScenarioError):
        scenario_from_dict({"engine": "markov", "schemes": [], "n": 1, "m": 1, "e": 0.1})


def test_parse_scenario_reports_json_errors(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json", encoding="utf-8")
    with pytest.raises(ScenarioError, match="line 1"):
        parse_scenario(bad)


def test_every_fixture_parses_and_analytic_ones_run():
    paths = sorted(p for p in fixture_dir().iterdir() if p.name.endswith(".json"))
    assert len(paths) >= 15
    for p in paths:
        s = parse_scenario(p)
        if s.engine != "simulate":
            t = run_scenario(s)
            assert not any(r.error for r in t.rows), p.name


def test_markov_table_row_values():
    t = run_scenario(scenario_from_dict({"engine": "markov", "schemes": ["NC", "SP", "MP", "MC"], "n": 3, "m": 2,
                                         "e": 0.2}))
    assert t["NC"].delay_ratio == pytest.approx(0.9312, abs=5e-5)
    assert t["NC"].throughput_ratio == pytest.approx(2.148, abs=5e-4)
    assert t["MC"].delay_ratio == pytest.approx(0.819, abs=5e-4)
    assert t["MC"].throughput_ratio == pytest.approx(1.221, abs=5e-4)


def test_hetero_table_row_values():
    t = run_scenario(scenario_from_dict({"engine": "closedform-hetero", "schemes": ["SP", "MC"], "e": [0.3, 0.4, 0.5]}))
    assert t["MC"].delay_ratio == pytest.approx(0.745, abs=5e-4)
    assert t["MC"].throughput_ratio == pytest.approx(1.343, abs=5e-4)


def test_single_path_ratios():
    t = run_scenario(scenario_from_dict(markov_doc(schemes=["SP", "MP"])))
    assert t["SP"].delay_ratio == t["SP"].throughput_ratio == 1.0
    assert t["MP"].delay_ratio == 1.0 and t["MP"].throughput_ratio == 1.0


def test_ratios_are_quotients_of_emitted_absolutes():
    for s in fixture_scenarios("table1") + fixture_scenarios("table3"):
        t = run_scenario(s)
        lines = t.to_csv().splitlines()[1:]
        rows = [line.split(",") for line in lines]
        sp = next(r for r in rows if r[1] == "SP")
        for r in rows:
            d, th, dr, tr = map(float, r[2:6])
            assert dr == pytest.approx(d / float(sp[2]), rel=1e-8)
            assert tr == pytest.approx(th / float(sp[3]), rel=1e-8)


def test_partial_table_on_scheme_failure():
    t = run_scenario(scenario_from_dict({"engine": "markov", "schemes": ["SP", "NC"], "n": 4, "m": 2, "e": 0.2}))
    assert t["NC"].error and not t["SP"].error
    assert "error" in t.to_text()


def table(name, pairs):
    return ComparisonTable(name, "x", [TableRow(s, d, th) for s, (d, th) in pairs.items()])


def test_identical_tables_agree():
    s = fixture_scenarios("table1")[0]
    a = run_scenario(s)
    cmp = rank_table(a, run_scenario(s))
    assert cmp.disagreements == 0
    assert cmp.most_divergent is None


def test_single_path_is_the_divergent_scheme():
    analytic = run_scenario(parse_scenario(fixture_dir() / "table1-3x4-e0.2.json"))
    # simulated delay (ms) / throughput (Mbps) for three 4-hop paths, d_v = 80 m
    simulated = table("sim", {"MP": (198.7, 1.81), "MC": (75.8, 1.02), "NC": (26.7, 1.70),
                              "G-NC": (329.4, 1.50), "SP": (49.2, 2.14)})
    cmp = rank_table(analytic, simulated)
    assert cmp.schemes == ["MC", "MP", "NC", "SP"]
    assert cmp.most_divergent == "SP"
    # SP and MP tie on analytic delay; broken by name and flagged
    assert ("delay", ["MP", "SP"]) in cmp.ties["analytic"]
    assert cmp.delay_ranks["analytic"]["MP"] < cmp.delay_ranks["analytic"]["SP"]


def test_single_scheme_ranking():
    cmp = rank_table(table("a", {"SP": (1, 1)}), table("b", {"SP": (2, 2)}))
    assert cmp.delay_ranks["analytic"] == {"SP": 1}
    assert cmp.disagreements == 0


def test_hop_sweep_single_path_column():
    base = scenario_from_dict({"engine": "markov", "schemes": ["SP", "NC"], "n": 3, "m": 2, "e": 0.2})
    text = sweep_csv(base, "m", [2, 3, 4, 6])
    sp = [float(line.split(",")[4]) for line in text.splitlines()[1:] if line.split(",")[1] == "SP"]
    assert sp == pytest.approx([2.5, 3.75, 5.0, 7.5])


def test_error_sweep_monotone():
    base = scenario_from_dict({"engine": "closedform-hbh", "schemes": ["SP", "NC"], "n": 3, "e": 0.0})
    values = [round(0.1 * i, 1) for i in range(10)]
    text = sweep_csv(base, "e", values)
    nc = [float(line.split(",")[4]) for line in text.splitlines()[1:] if line.split(",")[1] == "NC"]
    assert all(a < b for a, b in zip(nc, nc[1:]))


def test_empty_sweep_is_header_only():
    base = scenario_from_dict(markov_doc())
    assert sweep_csv(base, "m", []) == "scenario,scheme,axis,value,delay,throughput,delay_ratio_to_sp,throughput_ratio_to_sp\n"
    with pytest.raises(ScenarioError):
        sweep_csv(base, "colour", [1])


def test_csv_is_stable_and_lf_terminated():
    s = fixture_scenarios("table2")[0]
    a, b = run_scenario(s).to_csv(), run_scenario(s).to_csv()
    assert a == b
    assert "\r" not in a and a.endswith("\n")
    # 9 significant digits
    assert len(a.splitlines()[1].split(",")[2].replace(".", "").lstrip("0")) <= 9


def test_simulation_table_is_reproducible():
    doc = {"engine": "simulate", "schemes": ["SP", "NC"], "n": 3, "m": 2, "k": 2,
           "sim": {"d_v": 40.0, "stop_after": 100}, "reps": 2, "seed": 5}
    a = run_scenario(scenario_from_dict(doc))
    b = run_scenario(scenario_from_dict(doc))
    assert a.to_csv() == b.to_csv()
    assert a.metadata["seeds"] == [5, 6]
    assert not math.isnan(a["NC"].extras["delay_se"])


def test_cli_exit_codes(tmp_path, capsys):
    good = tmp_path / "s.json"
    good.write_text(json.dumps(markov_doc(schemes=["SP", "MP"])), encoding="utf-8")
    out = tmp_path / "out.csv"
    assert main(["analytic", "--scenario", str(good), "--format", "csv", "--out", str(out)]) == 0
    assert out.read_text().startswith("scenario,scheme,delay")
    assert main(["analytic", "--scenario", str(tmp_path / "missing.json")]) == 1
    assert main(["nonsense"]) == 1
    assert main(["simulate", "--scenario", str(good)]) == 1
    bad = tmp_path / "budget.json"
    bad.write_text(json.dumps({"engine": "markov", "schemes": ["SP", "MC"], "n": 7, "m": 12, "e": 0.2}))
    assert main(["analytic", "--scenario", str(bad)]) == 2
    capsys.readouterr()
    assert main(["reproduce", "table3", "--check", "--format", "json"]) == 0
    assert len(json.loads(capsys.readouterr().out)) == 2
    assert main(["reproduce", "fig4", "--check"]) == 0


def test_cli_check_mismatch_exit_code():
    # one printed seven-path cell sits outside tolerance (see the acceptance suite)
    assert main(["reproduce", "table2", "--check", "--format", "csv"]) == 3


def test_cli_sweep_and_compare(tmp_path, capsys):
    a = tmp_path / "a.json"
    a.write_text(json.dumps({"engine": "markov", "schemes": ["SP", "MC"], "n": 3, "m": 1, "e": 0.3}))
    assert main(["sweep", "--scenario", str(a), "--axis", "e", "--values", "0.1,0.2"]) == 0
    assert capsys.readouterr().out.count("\n") == 5
    assert main(["compare", "--scenario", str(a), "--scenario", str(a), "--format", "csv"]) == 0
    assert "delay_agrees" in capsys.readouterr().out

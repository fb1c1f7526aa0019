from meshfwd.report.scenario import SCHEMA_VERSION, Scenario, ScenarioError, parse_scenario, scenario_from_dict
from meshfwd.report.tables import (
    ComparisonTable,
    RankComparison,
    TableRow,
    rank_table,
    run_scenario,
    sweep,
    sweep_csv,
)

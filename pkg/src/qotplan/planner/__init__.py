"""Multi-period RCSA planning simulator."""

from qotplan.planner.paths import k_shortest_paths
from qotplan.planner.rcsa import (
    EOL,
    MONTHLY,
    YEARLY,
    RCSA_MODES,
    Lightpath,
    PeriodReport,
    PlanState,
    audit,
    downgrade_pass,
    order_demands,
    place_lightpath,
    read_report,
    run_study,
    select_candidates,
    study_periods,
    up_ratio,
    write_report,
)

__all__ = [
    "EOL",
    "MONTHLY",
    "YEARLY",
    "RCSA_MODES",
    "Lightpath",
    "PeriodReport",
    "PlanState",
    "audit",
    "downgrade_pass",
    "k_shortest_paths",
    "order_demands",
    "place_lightpath",
    "read_report",
    "run_study",
    "select_candidates",
    "study_periods",
    "up_ratio",
    "write_report",
]

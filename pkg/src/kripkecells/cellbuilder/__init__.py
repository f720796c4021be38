"""Cell constructions: schedules, alienated extensions, the fanout builder and a third agent."""

from .alienated import (AlienatedPath, GFormula, LemmaResult, SeparationReport, alienated_extend,
                        g_formula, lemma2_check, lemma3_check, lemma4_check, mutate_choice,
                        separation_witness, theory_jump)
from .fanout import (FAIL, PASS, UNRESOLVED, FanoutState, check_schedule_conditions, fanout_build,
                     fanout_checks)
from .schedule import MAX_HORIZON, Schedule, ScheduleExhausted, beta_map, naturals, parse_schedule
from .third_agent import (adjacency_radius, good_subset_check, third_agent_labels,
                          third_agent_structure)

__all__ = [
    "AlienatedPath", "GFormula", "LemmaResult", "SeparationReport", "alienated_extend",
    "g_formula", "lemma2_check", "lemma3_check", "lemma4_check", "mutate_choice",
    "separation_witness", "theory_jump",
    "FAIL", "PASS", "UNRESOLVED", "FanoutState", "check_schedule_conditions", "fanout_build",
    "fanout_checks",
    "MAX_HORIZON", "Schedule", "ScheduleExhausted", "beta_map", "naturals", "parse_schedule",
    "adjacency_radius", "good_subset_check", "third_agent_labels", "third_agent_structure",
]

"""Variable-setting Lovasz Local Lemma: resampling solver and analysis tools."""

from varlll.model import (
    DependencyGraph,
    EventSpec,
    EventSystem,
    VariableSpec,
    build_dependency_graph,
    evaluate_event,
    event_probability,
)
from varlll.sampler import ExecutionTrace, Outcome, run

__all__ = [
    "DependencyGraph",
    "EventSpec",
    "EventSystem",
    "ExecutionTrace",
    "Outcome",
    "VariableSpec",
    "build_dependency_graph",
    "evaluate_event",
    "event_probability",
    "run",
]

__version__ = "0.1.0"

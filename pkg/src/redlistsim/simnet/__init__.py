from .node import Network, Node, NodeSpec
from .report import SimReport, render_chain
from .scenario import Scenario, ScenarioError, load_scenario, parse_scenario, run_scenario

__all__ = [
    "Network", "Node", "NodeSpec", "SimReport", "render_chain",
    "Scenario", "ScenarioError", "load_scenario", "parse_scenario", "run_scenario",
]

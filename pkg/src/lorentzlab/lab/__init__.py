"""Scenario-driven runs: config files, artifacts, convergence studies, CLI."""
from .config import ConfigError, Scenario, parse_config, parse_text
from .runner import RunResult, resume, run_scenario
from .scenarios import ripples_scenario

__all__ = ["ConfigError", "Scenario", "parse_config", "parse_text", "RunResult", "resume", "run_scenario",
           "ripples_scenario"]

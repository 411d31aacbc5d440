#!/usr/bin/env python3
"""
Base Experiment
Scenario registry and dispatch shared by the command line and the HTTP service
"""

import logging
from typing import Any, Dict, List, Optional

logging.basicConfig(level=logging.INFO)


class ScenarioError(Exception):
    """A scenario failed; the original exception is kept as __cause__"""

    def __init__(self, scenario: str, message: str):
        super().__init__(f"{scenario}: {message}")
        self.scenario = scenario
        self.message = message

    @property
    def is_io_error(self) -> bool:
        return isinstance(self.__cause__, OSError)

    @property
    def is_invalid_input(self) -> bool:
        return isinstance(self.__cause__, (ValueError, KeyError, TypeError))


class BaseExperiment:
    """Base class for experiment runners: named scenarios with JSON input schemas"""

    def __init__(self, name: str, scenarios: Optional[List[Dict[str, Any]]] = None):
        self.name = name
        self.scenarios = scenarios or []
        self.logger = logging.getLogger(f"{name}-experiments")

    def scenario_names(self) -> List[str]:
        return [s["name"] for s in self.scenarios]

    def get_scenario(self, name: str) -> Optional[Dict[str, Any]]:
        for scenario in self.scenarios:
            if scenario["name"] == name:
                return scenario
        return None

    def execute_scenario(self, name: str, arguments: Dict[str, Any]) -> Dict[str, Any]:
        """Run a registered scenario; every failure surfaces as a ScenarioError"""
        if self.get_scenario(name) is None:
            raise ScenarioError(name, f"Unknown scenario. Available scenarios: {', '.join(self.scenario_names())}") \
                from ValueError(name)
        try:
            return self.run_scenario(name, arguments)
        except ScenarioError:
            raise
        except Exception as e:
            self.logger.error(f"❌ Scenario {name} failed: {e}")
            raise ScenarioError(name, str(e)) from e

    def run_scenario(self, name: str, arguments: Dict[str, Any]) -> Dict[str, Any]:
        """Scenario logic - must be implemented by subclasses"""
        raise NotImplementedError("Subclasses must implement run_scenario method")

    def describe(self) -> List[str]:
        return [f"{s['name']} - {s['description']}" for s in self.scenarios]

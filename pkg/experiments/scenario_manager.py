#!/usr/bin/env python3
"""
Scenario Manager
Shipped defaults, named presets and damage areas from the experiments JSON files
"""

import json
import logging
import os
from typing import Any, Dict, List, Optional

from swarm.evolution import EvolutionConfig

from experiments.damage import Rect

logging.basicConfig(level=logging.INFO)
logger = logging.getLogger("scenario-manager")


class ScenarioManager:
    """Loads experiments/config.json and experiments/scenarios.json and resolves names against them"""

    def __init__(self, config_file: str = None, scenarios_file: str = None):
        current_dir = os.path.dirname(os.path.abspath(__file__))
        self.config_file = config_file or os.path.join(current_dir, "config.json")
        self.scenarios_file = scenarios_file or os.path.join(current_dir, "scenarios.json")
        self.settings: Dict[str, Any] = {}
        self.presets: Dict[str, Dict[str, Any]] = {}
        self.areas: Dict[str, Dict[str, Any]] = {}
        self.load_configuration()

    def load_configuration(self):
        """Load shipped defaults and the scenario catalogue; a missing file leaves that layer empty"""
        try:
            with open(self.config_file, "r") as f:
                self.settings = json.load(f)
            logger.debug(f"✅ Loaded defaults from {self.config_file}")
        except Exception as e:
            logger.error(f"❌ Failed to load defaults: {e}")

        try:
            with open(self.scenarios_file, "r") as f:
                catalogue = json.load(f)
            for name, preset in catalogue.get("presets", {}).items():
                self.presets[name] = {
                    "name": name,
                    "description": preset.get("description", ""),
                    "config": preset.get("config", {}),
                }
            for name, area in catalogue.get("damageAreas", {}).items():
                self.areas[name] = {
                    "name": name,
                    "description": area.get("description", ""),
                    "grid": area.get("grid", ""),
                    "rect": area["rect"],
                    "approximate": area.get("approximate", False),
                }
            logger.debug(f"✅ Loaded {len(self.presets)} presets and {len(self.areas)} damage areas "
                         f"from {self.scenarios_file}")
        except Exception as e:
            logger.error(f"❌ Failed to load scenario catalogue: {e}")

    def section(self, name: str) -> Dict[str, Any]:
        return dict(self.settings.get(name, {}))

    def defaults(self) -> Dict[str, Any]:
        """Shipped EvolutionConfig field values"""
        return self.section("evolution")

    def get_preset(self, name: str) -> Dict[str, Any]:
        if name not in self.presets:
            raise ValueError(f"Preset '{name}' not found. Available presets: {', '.join(self.presets)}")
        return dict(self.presets[name]["config"])

    def get_area(self, name: str) -> Rect:
        if name not in self.areas:
            raise ValueError(f"Damage area '{name}' not found. Available areas: {', '.join(self.areas)}")
        x_min, y_min, x_max, y_max = self.areas[name]["rect"]
        return Rect(x_min=x_min, y_min=y_min, x_max=x_max, y_max=y_max)

    def build_config(self, preset: Optional[str] = None,
                     overrides: Optional[Dict[str, Any]] = None) -> EvolutionConfig:
        """Layer shipped defaults, a preset and explicit field overrides, lowest precedence first"""
        fields = self.defaults()
        if preset:
            fields.update(self.get_preset(preset))
        fields.update(overrides or {})
        return EvolutionConfig(**fields)

    def list_presets(self) -> List[Dict[str, Any]]:
        return list(self.presets.values())

    def list_areas(self) -> List[Dict[str, Any]]:
        return list(self.areas.values())


# Global instance
scenario_manager = ScenarioManager()

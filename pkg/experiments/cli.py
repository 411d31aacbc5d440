#!/usr/bin/env python3
"""
Surprise Swarm Command Line
surprise-swarm [global flags] <verb> [verb flags]

Configuration layers, lowest precedence first: model defaults, experiments/config.json,
--preset, --config FILE, explicit flags. Config-file keys are the flag names with underscores.
"""

import argparse
import json
import logging
import sys
from typing import Any, Dict, List, Optional, Tuple

from experiments.base_experiment import ScenarioError
from experiments.runner import ExperimentRunner
from experiments.scenario_manager import scenario_manager

logger = logging.getLogger("surprise-swarm")

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_IO = 3

# flag key -> EvolutionConfig field
FIELD_KEYS = {
    "seed": "seed",
    "swarm": "swarm_size",
    "sensor_model": "sensor_model",
    "mask": "mask",
    "noise": "noise",
    "workers": "workers",
    "generations": "generations",
    "population": "population_size",
    "eval_length": "eval_length",
    "evals": "evals_per_genome",
    "mutation_rate": "mutation_rate",
}

# keys that steer the CLI itself and never reach a scenario
CONTROL_KEYS = {"verb", "config", "preset", "log_level", "host", "port"}


def parse_grid(text: str) -> Tuple[int, int]:
    """'WxH' -> (W, H)"""
    try:
        width, height = (int(part) for part in str(text).lower().split("x"))
    except ValueError:
        raise ValueError(f"Grid '{text}' must look like WxH, e.g. 15x15")
    return width, height


def parse_levels(text) -> List[float]:
    if isinstance(text, (list, tuple)):
        return [float(v) for v in text]
    return [float(v) for v in str(text).split(",") if v.strip()]


def build_parser() -> argparse.ArgumentParser:
    # SUPPRESS keeps unset flags out of the namespace so lower layers show through
    parser = argparse.ArgumentParser(prog="surprise-swarm", argument_default=argparse.SUPPRESS,
                                     description="Minimal-surprise swarm self-assembly with evolved networks")
    parser.add_argument("--seed", type=int, help="Master seed")
    parser.add_argument("--grid", help="Torus size WxH")
    parser.add_argument("--swarm", type=int, help="Number of robots")
    parser.add_argument("--sensor-model", dest="sensor_model", choices=["A", "B", "C"])
    parser.add_argument("--mask", choices=["none", "partial", "full"], help="Predefined predictions")
    parser.add_argument("--noise", type=float, help="Sensor bit-flip probability")
    parser.add_argument("--out", help="Output directory")
    parser.add_argument("--config", help="JSON file with flag values")
    parser.add_argument("--preset", help="Named preset from scenarios.json")
    parser.add_argument("--workers", type=int, help="Worker processes")
    parser.add_argument("--log-level", dest="log_level", choices=["DEBUG", "INFO", "WARNING", "ERROR"])

    verbs = parser.add_subparsers(dest="verb", required=True)
    suppress = {"argument_default": argparse.SUPPRESS}

    evolve = verbs.add_parser("evolve", help="Evolve action and prediction networks", **suppress)
    evolve.add_argument("--generations", type=int)
    evolve.add_argument("--population", type=int)
    evolve.add_argument("--eval-length", dest="eval_length", type=int)
    evolve.add_argument("--evals", type=int, help="Evaluations per genome")
    evolve.add_argument("--mutation-rate", dest="mutation_rate", type=float)
    evolve.add_argument("--runs", type=int, help="Independent evolutions")
    evolve.add_argument("--snapshot-every", dest="snapshot_every", type=int)

    rerun = verbs.add_parser("rerun", help="Evaluate a genome from fresh starting positions", **suppress)
    rerun.add_argument("--genome", required=True)
    rerun.add_argument("--repeats", type=int)
    rerun.add_argument("--snapshot-every", dest="snapshot_every", type=int)

    damage = verbs.add_parser("damage", help="Remove or reposition an area and simulate the recovery", **suppress)
    damage.add_argument("--genome", required=True)
    damage.add_argument("--mode", required=True, choices=["remove", "reposition"])
    area = damage.add_mutually_exclusive_group()
    area.add_argument("--area", help="Named damage area")
    area.add_argument("--rect", help="x_min,y_min,x_max,y_max")
    damage.add_argument("--base-seed", dest="base_seed", type=int)
    damage.add_argument("--extra-steps", dest="extra_steps", type=int)
    damage.add_argument("--repeats", type=int)

    sweep = verbs.add_parser("noise-sweep", help="Evolutions per sensor-noise level", **suppress)
    sweep.add_argument("--levels", help="Comma-separated noise levels")
    sweep.add_argument("--runs-per-level", dest="runs_per_level", type=int)

    classify = verbs.add_parser("classify", help="Classify an ASCII snapshot", **suppress)
    classify.add_argument("snapshot")

    stats = verbs.add_parser("stats", help="Summarize and check a run directory", **suppress)
    stats.add_argument("run_dir")

    verbs.add_parser("presets", help="List presets and damage areas", **suppress)

    serve = verbs.add_parser("serve", help="Start the HTTP scenario server", **suppress)
    serve.add_argument("--host")
    serve.add_argument("--port", type=int)
    return parser


def load_settings(namespace: argparse.Namespace) -> Dict[str, Any]:
    """Merge a --config file under the explicit flags"""
    flags = vars(namespace)
    settings: Dict[str, Any] = {}
    if "config" in flags:
        with open(flags["config"], "r") as f:
            loaded = json.load(f)
        if not isinstance(loaded, dict):
            raise ValueError(f"Config file {flags['config']} must hold a JSON object")
        settings.update(loaded)
    settings.update(flags)
    return settings


def scenario_arguments(settings: Dict[str, Any]) -> Dict[str, Any]:
    """Split flat settings into EvolutionConfig overrides and scenario arguments"""
    overrides = {FIELD_KEYS[k]: v for k, v in settings.items() if k in FIELD_KEYS}
    if "grid" in settings:
        overrides["width"], overrides["height"] = parse_grid(settings["grid"])
    arguments = {k: v for k, v in settings.items()
                 if k not in FIELD_KEYS and k not in CONTROL_KEYS and k != "grid"}
    if "levels" in arguments:
        arguments["levels"] = parse_levels(arguments["levels"])
    arguments["config"] = overrides
    if settings.get("preset"):
        arguments["preset"] = settings["preset"]
    return arguments


def print_result(verb: str, result: Dict[str, Any]):
    if verb == "classify":
        print(result["summary"])
        return
    if verb == "stats":
        print(f"📁 {result['out']}: {result['runs']} runs, median fitness {result['median_fitness']:.4f}")
        if "best_fitness" in result:
            print(f"🧬 {result['generations']} generations, best fitness {result['best_fitness']:.4f}, "
                  f"budget {result['budget']} robot steps")
        print(f"🏷️ labels: {result['labels']}")
        print(f"🔮 mean predictions (run 0): {result['mean_prediction']}")
        if result["consistent"]:
            print("✅ all metrics match their recomputation")
        else:
            for m in result["mismatches"]:
                print(f"❌ run {m['run']} {m['field']}: recorded {m['reported']}, recomputed {m['recomputed']}")
        return
    print(json.dumps(result, indent=1, sort_keys=True))


def list_presets():
    print("Presets:")
    for preset in scenario_manager.list_presets():
        print(f"  {preset['name']:<14} {preset['description']}")
    print("Damage areas:")
    for area in scenario_manager.list_areas():
        flag = " (approximate)" if area["approximate"] else ""
        print(f"  {area['name']:<14} {area['grid']:<6} {tuple(area['rect'])}{flag}")


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    namespace = parser.parse_args(argv)
    try:
        settings = load_settings(namespace)
    except OSError as e:
        print(f"❌ {e}", file=sys.stderr)
        return EXIT_IO
    except ValueError as e:
        print(f"❌ {e}", file=sys.stderr)
        return EXIT_INVALID

    level = settings.get("log_level") or scenario_manager.section("logging").get("level", "INFO")
    logging.basicConfig(level=logging.INFO)
    logging.getLogger().setLevel(level)
    verb = settings["verb"]

    if verb == "presets":
        list_presets()
        return EXIT_OK

    if verb == "serve":
        from experiments.server import ScenarioServer

        server = scenario_manager.section("server")
        ScenarioServer(host=settings.get("host", server.get("host", "0.0.0.0")),
                       port=settings.get("port", server.get("port", 4000))).start_server()
        return EXIT_OK

    runner = ExperimentRunner()
    try:
        result = runner.execute_scenario(verb, scenario_arguments(settings))
    except ScenarioError as e:
        print(f"❌ {e}", file=sys.stderr)
        return EXIT_IO if e.is_io_error else EXIT_INVALID
    except ValueError as e:
        print(f"❌ {e}", file=sys.stderr)
        return EXIT_INVALID
    print_result(verb, result)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())

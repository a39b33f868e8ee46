"""Python access to the icsbed testbed: scenarios, runs and captures."""

from ._icsbed import (
    CommandConflict,
    ScenarioConfig,
    Simulation,
    bottle_plant_scenario,
    decode_adu,
    default_scenario,
    dissect_capture,
    load_config,
    parse_config,
    read_pcap,
)

__all__ = [
    "CommandConflict",
    "ScenarioConfig",
    "Simulation",
    "bottle_plant_scenario",
    "decode_adu",
    "default_scenario",
    "dissect_capture",
    "load_config",
    "parse_config",
    "read_pcap",
    "run",
]


def run(config, out_dir=None):
    """Run a scenario (path, dict or ScenarioConfig) to its end and return the summary."""
    if isinstance(config, str) and not config.lstrip().startswith("{"):
        config = load_config(config)
    return Simulation(config, out_dir).run()

from ._beamlab import (
    StftParams,
    analyze,
    beampattern,
    compose_scene,
    preset_names,
    run_preset,
    run_scenario,
    speech_source,
    synthesize,
)

__all__ = [
    "StftParams",
    "analyze",
    "beampattern",
    "compose_scene",
    "preset_names",
    "run_preset",
    "run_scenario",
    "speech_source",
    "synthesize",
]

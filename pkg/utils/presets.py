"""
Presets empaquetados de configuración.

klatt-reference: planta de referencia fructosa/glucosa (8 columnas, 2-2-2-2)
en el límite EDM del GRM, con las cotas de diseño del muestreador.
"""
import copy
from typing import Any, Callable, Dict, Optional

from schemas.run_config import RunConfig
from utils.errors import InvalidInputError
from utils.transport_engine import edm_limit_preset

COMPONENT_NAMES = ["glc", "fru"]

REFERENCE_OPERATING_POINT = {
    "length": 0.536,
    "switch_time": 1552.0,
    "recycle_flow": 1.395e-7,
    "feed_flow": 2.0e-8,
    "desorbent_flow": 4.14e-8,
    "extract_flow": 3.48e-8,
}

REFERENCE_BOUNDS = {
    "lower": [0.50, 1500.0, 1.0e-7, 1.5e-8, 3.5e-8, 3.0e-8],
    "upper": [0.60, 1600.0, 1.8e-7, 2.5e-8, 4.5e-8, 4.0e-8],
}


def _reference_plant() -> Dict[str, Any]:
    disc, overrides = edm_limit_preset()
    return {
        "plant": {
            "geometry": {
                "length": REFERENCE_OPERATING_POINT["length"],
                "diameter": 0.026,
                "particle_radius": 1.625e-3,
                "column_porosity": 0.38,
                "particle_porosity": overrides.particle_porosity,
            },
            "transport": {
                "axial_dispersion": [1e-7, 1e-7, 1e-7, 1e-7],
                "pore_diffusion": [overrides.pore_diffusion] * 2,
                "film_transfer": [overrides.film_transfer] * 2,
            },
            "isotherm": {"henry": [0.28, 0.54], "component_names": list(COMPONENT_NAMES)},
            "network": {
                "zone_layout": [2, 2, 2, 2],
                "feed_concentration": [3052.8, 3052.8],
                "desorbent_concentration": [0.0, 0.0],
            },
        },
        "solver": {
            "discretization": disc.model_dump(mode="json"),
            "css_tolerance": 1e-5,
            "css_max_switches": 300,
        },
        "objective": {
            "raffinate_component": 0,
            "extract_component": 1,
            "purity_raffinate": 0.99,
            "purity_extract": 0.99,
            "penalty_factor": 100.0,
        },
        "sampler": {
            "bounds": copy.deepcopy(REFERENCE_BOUNDS),
            "chains": 2,
            "budget": 400,
            "burn_in": 50,
            "rhat_threshold": 1.1,
            "adaptation_interval": 50,
            "monitor_every": 10,
        },
        "operating_point": dict(REFERENCE_OPERATING_POINT),
    }


def _reference_plant_999() -> Dict[str, Any]:
    document = _reference_plant()
    document["objective"]["purity_raffinate"] = 0.999
    document["objective"]["purity_extract"] = 0.999
    return document


def _desk_scale() -> Dict[str, Any]:
    """Escala reducida: N_z = 20, modo edm-equilibrium, presupuesto corto"""
    document = _reference_plant()
    document["solver"]["discretization"].update({"n_axial": 20, "mode": "edm-equilibrium"})
    document["sampler"].update({"budget": 100, "burn_in": 25})
    return document


PRESETS: Dict[str, Callable[[], Dict[str, Any]]] = {
    "klatt-reference": _reference_plant,
    "klatt-reference-999": _reference_plant_999,
    "desk-scale": _desk_scale,
}


def preset_document(name: str) -> Dict[str, Any]:
    """Documento de configuración (dict) de un preset"""
    try:
        return PRESETS[name]()
    except KeyError:
        raise InvalidInputError(f"preset desconocido: {name}", available=sorted(PRESETS)) from None


def merge_documents(base: Dict[str, Any], override: Dict[str, Any]) -> Dict[str, Any]:
    """Fusión recursiva: los valores de `override` pisan a los de `base`"""
    merged = copy.deepcopy(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = merge_documents(merged[key], value)
        else:
            merged[key] = copy.deepcopy(value)
    return merged


def load_run_config(document: Optional[Dict[str, Any]] = None, preset: Optional[str] = None) -> RunConfig:
    """
    RunConfig a partir de un preset, un documento o ambos (el documento
    sobrescribe al preset).
    """
    if document is None and preset is None:
        raise InvalidInputError("se necesita --config o --preset")
    base = preset_document(preset) if preset else {}
    return RunConfig.model_validate(merge_documents(base, document or {}))

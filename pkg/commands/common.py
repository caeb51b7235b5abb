"""
Utilidades compartidas por los comandos: carga de configuración, directorio
de salida, hilos y traducción de errores a códigos de salida.
"""
import json
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional

import click
from pydantic import ValidationError

from config import DEFAULT_OUTPUT_DIR, DEFAULT_PRESET, default_thread_count
from schemas.run_config import RunConfig
from utils.errors import EXIT_INVALID_INPUT, EXIT_NUMERICAL, EXIT_OK, InvalidInputError, SmbBayesError
from utils.logging_utils import log_event
from utils.presets import load_run_config

RUN_CONFIG_FILE = "run_config.json"


# ========== CONFIGURACIÓN ==========

def read_config_file(path) -> Dict[str, Any]:
    """Documento JSON de configuración"""
    path = Path(path)
    try:
        with open(path, encoding="utf-8") as fh:
            document = json.load(fh)
    except FileNotFoundError:
        raise InvalidInputError(f"no existe el archivo de configuración: {path}") from None
    except json.JSONDecodeError as e:
        raise InvalidInputError(f"JSON inválido en {path}: línea {e.lineno}, columna {e.colno}") from e
    if not isinstance(document, dict):
        raise InvalidInputError(f"la configuración debe ser un objeto JSON: {path}")
    return document


def resolve_config(config_path: Optional[str], preset: Optional[str], fallback: Optional[Path] = None) -> RunConfig:
    """
    --config y --preset se combinan (el archivo sobrescribe al preset). Sin
    ninguno se usa `fallback` (la config guardada en una corrida) o el preset
    por defecto.
    """
    document = read_config_file(config_path) if config_path else None
    if document is None and preset is None:
        if fallback is not None and fallback.exists():
            return load_run_config(read_config_file(fallback))
        preset = DEFAULT_PRESET
    return load_run_config(document, preset)


def write_run_config(config: RunConfig, directory: Path) -> Path:
    directory.mkdir(parents=True, exist_ok=True)
    target = directory / RUN_CONFIG_FILE
    target.write_text(config.model_dump_json(indent=2), encoding="utf-8")
    return target


def resolve_output_dir(out: Optional[str], config: RunConfig) -> Path:
    """--out > paths.output_dir > SMBBAYES_OUT"""
    return Path(out or config.paths.output_dir or DEFAULT_OUTPUT_DIR)


def resolve_threads(threads: Optional[int]) -> int:
    return threads if threads and threads > 0 else default_thread_count()


# ========== ERRORES ==========

def format_validation_error(error: ValidationError) -> List[str]:
    """Una línea por error con la ruta del campo: plant.geometry.length: ..."""
    lines = []
    for item in error.errors():
        location = ".".join(str(part) for part in item["loc"]) or "<raíz>"
        lines.append(f"{location}: {item['msg']}")
    return lines


def run_command(name: str, action: Callable[[], int]) -> int:
    """
    Ejecuta un comando y traduce excepciones a códigos de salida:
    0 ok, 1 fallo numérico, 2 entrada inválida.
    """
    log_event("cli", name, "start")
    try:
        code = action()
    except ValidationError as e:
        click.echo(f"Error de validación ({e.error_count()}):", err=True)
        for line in format_validation_error(e):
            click.echo(f"  {line}", err=True)
        code = EXIT_INVALID_INPUT
    except SmbBayesError as e:
        click.echo(f"Error: {e}", err=True)
        code = e.exit_code
    except (ArithmeticError, FloatingPointError) as e:
        click.echo(f"Error numérico: {e}", err=True)
        code = EXIT_NUMERICAL
    level = "INFO" if code == EXIT_OK else "ERROR"
    log_event("cli", name, "finish", f"exit_code={code}", level=level)
    return code

"""
Comando simulate: un punto de operación hasta el CSS.

Escribe chromatogram.csv (perfil axial al final del período CSS) y
performance.json (Ψ, f, g, H, razones m_j y región).
"""
from pathlib import Path
from typing import Optional

import click

from commands.common import resolve_config, resolve_output_dir, run_command, write_run_config
from schemas.operating import OperatingPoint
from schemas.performance import PerformanceRecord
from schemas.run_config import RunConfig
from storage.run_store import RunStore
from utils.analysis_engine import classify_operating_point
from utils.errors import EXIT_OK, CssNotReachedError, InvalidInputError
from utils.logging_utils import log_event
from utils.network_engine import axial_profile, derive_flowrates, simulate_to_css
from utils.smb_target import evaluate_operating_point


def _has_feed(op: OperatingPoint, config: RunConfig) -> bool:
    return op.feed_flow > 0 and any(c > 0 for c in config.plant.network.feed_concentration)


def cmd_simulate(config: RunConfig, out_dir: Path, operating_point: Optional[OperatingPoint] = None) -> int:
    """
    Simula el punto de operación (el de la config si no se pasa otro).

    Returns:
        EXIT_OK si se alcanzó el CSS

    Raises:
        InvalidInputError: sin punto de operación
        InfeasibleOperatingPointError: caudales de zona no positivos
        CssNotReachedError: tope de conmutaciones (el perfil se escribe igual)
    """
    op = operating_point or config.operating_point
    if op is None:
        raise InvalidInputError("falta operating_point en la configuración")

    setup = config.simulation_setup()
    geometry = setup.geometry.with_length(op.length)
    derive_flowrates(op, geometry)
    store = RunStore(out_dir).ensure()
    write_run_config(config, store.root)
    names = setup.isotherm.component_names

    try:
        css = simulate_to_css(op, setup)
    except CssNotReachedError as e:
        if e.state is not None and e.state.last_profile is not None:
            store.write_chromatogram(axial_profile(e.state, geometry), names)
        raise

    if _has_feed(op, config):
        record = evaluate_operating_point(op, setup, config.objective, css)
    else:
        record = PerformanceRecord.zeros(names)

    ratios = classify_operating_point(op, setup.geometry, setup.isotherm)
    store.write_chromatogram(axial_profile(css.state, geometry), names)
    store.write_performance(record, extra={
        "operating_point": op.model_dump(exclude={"bounds"}),
        "css_switches": css.switches,
        "css_metric": css.metric,
        "flowrate_ratios": {"m_I": ratios.m_I, "m_II": ratios.m_II, "m_III": ratios.m_III, "m_IV": ratios.m_IV},
        "region": ratios.region.value,
    })
    log_event("cli", "simulate", "css_reached", switches=css.switches, h=record.h)
    return EXIT_OK


@click.command("simulate")
@click.option("--config", "config_path", type=click.Path(dir_okay=False), help="Archivo JSON de configuración")
@click.option("--preset", default=None, help="Preset empaquetado (p. ej. klatt-reference)")
@click.option("--out", default=None, help="Directorio de salida")
@click.pass_context
def simulate(ctx: click.Context, config_path: Optional[str], preset: Optional[str], out: Optional[str]):
    """Simula un punto de operación hasta el estado cíclico estacionario."""
    def action() -> int:
        config = resolve_config(config_path, preset)
        out_dir = resolve_output_dir(out, config)
        code = cmd_simulate(config, out_dir)
        click.echo(f"Resultados en {out_dir}")
        return code

    ctx.exit(run_command("simulate", action))

"""
Comando analyze: artefactos listos para graficar a partir de una corrida.

La fuente es un directorio de `sample` (cadenas post burn-in) o de `simulate`
(un único punto). Los archivos van a <out>/analysis/.
"""
import json
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import click
import numpy as np
import pandas as pd

from commands.common import RUN_CONFIG_FILE, resolve_config, resolve_threads, run_command
from config import THREADS_ENV_VAR
from schemas.operating import PARAMETER_COLUMNS
from schemas.performance import PerformanceRecord
from schemas.run_config import RunConfig
from storage.run_store import PERFORMANCE_FILE, RunStore
from utils.analysis_engine import (
    DEFAULT_PARETO_PAIRS,
    RATIO_PAIRS,
    characteristic_points,
    ci_table,
    derived_flows,
    linear_fit,
    marginal_density,
    pareto_front,
    ppc_envelope,
    ratio_difference_histogram,
    resolve_axis,
    triangle_table,
)
from utils.errors import EXIT_OK, AnalysisError, InsufficientSamplesError, InvalidInputError
from utils.logging_utils import log_event
from utils.smb_target import css_profile_simulator

ANALYSES = (
    "triangle",
    "pareto",
    "marginals",
    "ci-table",
    "fits",
    "ratio-histogram",
    "ppc",
    "characteristic-points",
)

DEFAULT_PPC_REPLICATES = 30


# ========== CARGA DE MUESTRAS ==========

def load_samples(store: RunStore) -> pd.DataFrame:
    """Muestras post burn-in de `sample` o el punto único de `simulate`"""
    if not store.exists():
        raise InvalidInputError(f"no hay una corrida en {store.root}")
    if store.chain_paths():
        return store.load_post_burn_in()

    data = store.load_performance()
    op = data["operating_point"]
    record = PerformanceRecord.model_validate(
        {k: v for k, v in data.items() if k in PerformanceRecord.model_fields}
    )
    row = dict(zip(PARAMETER_COLUMNS, (
        op["length"], op["switch_time"], op["recycle_flow"],
        op["feed_flow"], op["desorbent_flow"], op["extract_flow"],
    )))
    row.update({"chain": 0, "iteration": 0, "log_posterior": np.nan, "H": record.h, "f": record.f, "g": record.g})
    row.update(record.to_row())
    return pd.DataFrame([row])


# ========== ANÁLISIS INDIVIDUALES ==========

def _triangle(frame, config, store, names) -> List[Path]:
    table = _ratios(frame, config, names)
    return [
        store.write_frame("triangle_m23.csv", table[["m_II", "m_III", "region", "purity_class"]]),
        store.write_frame("triangle_m41.csv", table[["m_IV", "m_I", "region", "purity_class"]]),
    ]


def _pareto(frame, config, store, names) -> List[Path]:
    paths = []
    for template in DEFAULT_PARETO_PAIRS:
        axes = tuple(resolve_axis(t, names) for t in template)
        usable = frame.dropna(subset=list(axes))
        if usable.empty:
            log_event("analysis", "pareto", "skipped", f"axes={axes} sin valores", level="WARNING")
            continue
        result = pareto_front(usable[list(axes)].to_numpy(), axes)
        out = usable[list(PARAMETER_COLUMNS) + list(axes)].reset_index(drop=True)
        out["on_front"] = False
        out.loc[result.front, "on_front"] = True
        paths.append(store.write_frame(f"pareto_{axes[0]}__{axes[1]}.csv", out))
    return paths


def _with_derived(frame: pd.DataFrame) -> pd.DataFrame:
    return pd.concat([frame[list(PARAMETER_COLUMNS)], derived_flows(frame)], axis=1)


def _marginals(frame, config, store, names) -> List[Path]:
    paths = []
    values = _with_derived(frame)
    for column in values.columns:
        try:
            density = marginal_density(values[column].to_numpy())
        except InsufficientSamplesError as e:
            log_event("analysis", "marginals", "skipped", f"{column}: {e}", level="WARNING")
            continue
        out = pd.DataFrame({column: density.grid, "density": density.density})
        paths.append(store.write_frame(f"marginal_{column}.csv", out))
    return paths


def _ci_table(frame, config, store, names) -> List[Path]:
    values = _with_derived(frame)
    return [store.write_frame("ci_table.csv", ci_table(values, list(values.columns)))]


def _ratios(frame, config, names) -> pd.DataFrame:
    return triangle_table(frame, config.plant.geometry, config.plant.isotherm, names[-1], names[0])


def _fits(frame, config, store, names) -> List[Path]:
    ratios = _ratios(frame, config, names)
    fits: Dict[str, Dict[str, float]] = {}
    for key, x, y in (("m_III_vs_m_II", "m_II", "m_III"), ("m_I_vs_m_IV", "m_IV", "m_I")):
        try:
            fit = linear_fit(ratios[x], ratios[y])
        except AnalysisError as e:
            log_event("analysis", "fits", "skipped", f"{key}: {e}", level="WARNING")
            continue
        fits[key] = {"slope": fit.slope, "intercept": fit.intercept, "r_squared": fit.r_squared, "samples": len(ratios)}
    return [store.write_json("fits.json", fits, analysis=True)]


def _ratio_histograms(frame, config, store, names) -> List[Path]:
    ratios = _ratios(frame, config, names)
    paths = []
    for pair in RATIO_PAIRS:
        histogram = ratio_difference_histogram(ratios, pair)
        out = pd.DataFrame({
            "bin_lower": histogram.edges[:-1],
            "bin_upper": histogram.edges[1:],
            "count": histogram.counts,
            "mode": histogram.mode,
        })
        paths.append(store.write_frame(f"ratio_difference_{pair}.csv", out))
    return paths


def _characteristic_points(frame, config, store, names) -> List[Path]:
    labels = characteristic_points(frame, names[-1], names[0])
    rows = []
    for label, index in labels.items():
        row = frame.loc[index].to_dict()
        row["point"] = label
        rows.append(row)
    out = pd.DataFrame(rows)
    out = out[["point"] + [c for c in out.columns if c != "point"]]
    return [store.write_frame("characteristic_points.csv", out)]


def _ppc(frame, config, store, names, replicates: int, seed: Optional[int], threads: int) -> List[Path]:
    setup = config.simulation_setup()
    frame = frame.reset_index(drop=True)
    anchor = int(frame["log_posterior"].idxmax()) if frame["log_posterior"].notna().any() else None
    envelope = ppc_envelope(
        frame[list(PARAMETER_COLUMNS)].to_numpy(dtype=float),
        replicates,
        css_profile_simulator(setup),
        setup.network.n_columns,
        np.random.default_rng(seed),
        threads,
        anchor=anchor,
    )
    out = pd.DataFrame({"train_position": envelope.positions})
    for i, name in enumerate(names):
        out[f"lower_{name}_mol_m3"] = envelope.lower[i]
        out[f"upper_{name}_mol_m3"] = envelope.upper[i]
        if envelope.anchor_profile is not None:
            out[f"max_posterior_{name}_mol_m3"] = envelope.anchor_profile[i]
    return [store.write_frame("ppc_envelope.csv", out)]


_HANDLERS = {
    "triangle": _triangle,
    "pareto": _pareto,
    "marginals": _marginals,
    "ci-table": _ci_table,
    "fits": _fits,
    "ratio-histogram": _ratio_histograms,
    "characteristic-points": _characteristic_points,
}


# ========== COMANDO ==========

def cmd_analyze(
    config: RunConfig,
    store_path: Path,
    analyses: Sequence[str],
    out_dir: Optional[Path] = None,
    replicates: int = DEFAULT_PPC_REPLICATES,
    seed: Optional[int] = None,
    threads: int = 1,
) -> int:
    """
    Emite los artefactos pedidos.

    Raises:
        AnalysisError: nombre de análisis desconocido
        InvalidInputError: el directorio no contiene una corrida
    """
    unknown = [a for a in analyses if a not in ANALYSES]
    if unknown:
        raise AnalysisError(f"análisis desconocido: {', '.join(unknown)}", allowed=list(ANALYSES))
    if not analyses:
        return EXIT_OK

    source = RunStore(store_path)
    if not source.root.is_dir():
        raise InvalidInputError(f"no existe el directorio de la corrida: {store_path}")
    frame = load_samples(source)
    target = RunStore(out_dir).ensure() if out_dir else source
    names = config.plant.isotherm.component_names

    written: List[Path] = []
    for name in dict.fromkeys(analyses):
        if name == "ppc":
            written += _ppc(frame, config, target, names, replicates, seed, threads)
        else:
            written += _HANDLERS[name](frame, config, target, names)
        log_event("analysis", "analyze", name, f"samples={len(frame)}")
    click.echo(json.dumps([str(p) for p in written], indent=2))
    return EXIT_OK


@click.command("analyze")
@click.option("--store", "store_path", required=True, type=click.Path(), help="Directorio de una corrida")
@click.option("--analysis", "analyses", multiple=True, help=f"Análisis a emitir: {', '.join(ANALYSES)}")
@click.option("--config", "config_path", type=click.Path(dir_okay=False), help="Archivo JSON de configuración")
@click.option("--preset", default=None, help="Preset empaquetado (p. ej. klatt-reference)")
@click.option("--out", default=None, help="Directorio de salida (por defecto, el de la corrida)")
@click.option("--replicates", type=click.IntRange(min=2), default=DEFAULT_PPC_REPLICATES, help="Réplicas PPC")
@click.option("--seed", type=click.IntRange(0, 2 ** 64 - 1), default=None, help="Semilla de la selección PPC")
@click.option("--threads", type=click.IntRange(min=1), default=None, envvar=THREADS_ENV_VAR, help="Hilos del pool")
@click.pass_context
def analyze(
    ctx: click.Context,
    store_path: str,
    analyses: Sequence[str],
    config_path: Optional[str],
    preset: Optional[str],
    out: Optional[str],
    replicates: int,
    seed: Optional[int],
    threads: Optional[int],
):
    """Emite CSV/JSON de análisis a partir de una corrida."""
    def action() -> int:
        config = resolve_config(config_path, preset, fallback=Path(store_path) / RUN_CONFIG_FILE)
        return cmd_analyze(
            config, Path(store_path), list(analyses),
            Path(out) if out else None, replicates, seed, resolve_threads(threads),
        )

    ctx.exit(run_command("analyze", action))

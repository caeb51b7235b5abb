"""
Persistencia de una corrida en un directorio: CSV (pandas) y JSON.

Estructura:
    chain_<i>.csv          muestras de cada cadena (θ, log-posterior, H, f, g, etapa, Ψ)
    run_metadata.json      semillas, cadencias, umbrales, cotas, versión
    diagnostics.json       historia de R̂, R̂ final, n_eff, aceptación, CI 66 %
    checkpoint.json        estado reanudable
    chromatogram.csv       perfil axial al CSS (simulate)
    performance.json       registro de indicadores (simulate)
    analysis/*.csv|json    artefactos de analyze
"""
import json
import math
import os
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

import numpy as np
import pandas as pd

from models.core import Diagnostics, SampleStore
from schemas.operating import PARAMETER_COLUMNS
from schemas.performance import PerformanceRecord
from utils.errors import CheckpointError, InvalidInputError
from utils.logging_utils import log_event

VERSION = "1.0.0"

CHAIN_PREFIX = "chain_"
METADATA_FILE = "run_metadata.json"
DIAGNOSTICS_FILE = "diagnostics.json"
CHECKPOINT_FILE = "checkpoint.json"
CHROMATOGRAM_FILE = "chromatogram.csv"
PERFORMANCE_FILE = "performance.json"
ANALYSIS_DIR = "analysis"

BASE_CHAIN_COLUMNS = ["iteration", *PARAMETER_COLUMNS, "log_posterior", "H", "f", "g", "stage"]


def _jsonable(value: Any) -> Any:
    """numpy y no finitos -> tipos JSON (NaN/inf se guardan como null)"""
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return _jsonable(value.tolist())
    if isinstance(value, np.generic):
        value = value.item()
    if isinstance(value, float) and not math.isfinite(value):
        return None
    return value


def chain_frame(store: SampleStore, chain: int, component_names: Sequence[str]) -> pd.DataFrame:
    """Filas de una cadena con las columnas de chain_<i>.csv"""
    indicator_columns = list(PerformanceRecord.zeros(list(component_names)).to_row())
    rows = []
    for row in store.rows(chain):
        record = row.record
        data: Dict[str, Any] = {"iteration": row.iteration}
        data.update(dict(zip(PARAMETER_COLUMNS, row.theta.tolist())))
        data["log_posterior"] = row.log_posterior
        data["H"] = record.h if record is not None and record.h is not None else np.nan
        data["f"] = record.f if record is not None and record.f is not None else np.nan
        data["g"] = record.g if record is not None and record.g is not None else np.nan
        data["stage"] = row.stage
        if record is not None:
            data.update(record.to_row())
        rows.append(data)
    return pd.DataFrame(rows, columns=BASE_CHAIN_COLUMNS + indicator_columns)


class RunStore:
    """Directorio de salida de una corrida"""

    def __init__(self, root):
        self.root = Path(root)

    # ---------- rutas ----------

    def ensure(self) -> "RunStore":
        self.root.mkdir(parents=True, exist_ok=True)
        return self

    def path(self, name: str) -> Path:
        return self.root / name

    def analysis_path(self, name: str) -> Path:
        directory = self.root / ANALYSIS_DIR
        directory.mkdir(parents=True, exist_ok=True)
        return directory / name

    def chain_paths(self) -> List[Path]:
        paths = sorted(
            self.root.glob(f"{CHAIN_PREFIX}*.csv"),
            key=lambda p: int(p.stem[len(CHAIN_PREFIX):]),
        )
        return paths

    def exists(self) -> bool:
        return self.root.is_dir() and bool(self.chain_paths() or self.path(PERFORMANCE_FILE).exists())

    # ---------- JSON ----------

    def write_json(self, name: str, data: Dict[str, Any], analysis: bool = False) -> Path:
        target = self.analysis_path(name) if analysis else self.path(name)
        # Escritura atómica: un checkpoint a medio escribir no debe reemplazar al anterior
        tmp = target.with_suffix(target.suffix + ".tmp")
        with open(tmp, "w", encoding="utf-8") as fh:
            json.dump(_jsonable(data), fh, indent=2, sort_keys=True)
        os.replace(tmp, target)
        return target

    def read_json(self, name: str) -> Dict[str, Any]:
        with open(self.path(name), encoding="utf-8") as fh:
            return json.load(fh)

    def write_frame(self, name: str, frame: pd.DataFrame, analysis: bool = True) -> Path:
        target = self.analysis_path(name) if analysis else self.path(name)
        frame.to_csv(target, index=False)
        return target

    # ---------- sample ----------

    def write_chains(self, store: SampleStore, component_names: Sequence[str]) -> List[Path]:
        self.ensure()
        paths = []
        for chain in range(store.n_chains):
            target = self.path(f"{CHAIN_PREFIX}{chain}.csv")
            chain_frame(store, chain, component_names).to_csv(target, index=False)
            paths.append(target)
        return paths

    def load_chains(self) -> pd.DataFrame:
        """Todas las cadenas en un DataFrame con una columna `chain`"""
        paths = self.chain_paths()
        if not paths:
            raise InvalidInputError(f"no hay cadenas en {self.root}")
        frames = []
        for p in paths:
            frame = pd.read_csv(p)
            frame.insert(0, "chain", int(p.stem[len(CHAIN_PREFIX):]))
            frames.append(frame)
        return pd.concat(frames, ignore_index=True)

    def load_post_burn_in(self) -> pd.DataFrame:
        """Muestras posteriores al burn-in registrado en run_metadata.json"""
        frame = self.load_chains()
        burn_in = int(self.load_metadata().get("burn_in", 0))
        position = frame.groupby("chain").cumcount()
        return frame[position >= burn_in].reset_index(drop=True)

    def write_metadata(self, metadata: Dict[str, Any]) -> Path:
        self.ensure()
        data = {"version": VERSION, "created_at": datetime.now(timezone.utc).isoformat()}
        data.update(metadata)
        return self.write_json(METADATA_FILE, data)

    def load_metadata(self) -> Dict[str, Any]:
        if not self.path(METADATA_FILE).exists():
            return {}
        return self.read_json(METADATA_FILE)

    def write_diagnostics(self, diagnostics: Diagnostics, credible_intervals: Dict[str, Any]) -> Path:
        names = list(diagnostics.parameter_names)
        data = {
            "converged": diagnostics.converged,
            "threshold": diagnostics.threshold,
            "post_burn_in_length": diagnostics.post_burn_in_length,
            "rhat_history": diagnostics.rhat_history,
            "rhat": dict(zip(names, diagnostics.rhat.tolist())),
            "ess": dict(zip(names, diagnostics.ess.tolist())),
            "mean_ess": diagnostics.mean_ess,
            "acceptance": diagnostics.acceptance,
            "autocorrelation": diagnostics.autocorrelation,
            "credible_intervals": credible_intervals,
        }
        return self.write_json(DIAGNOSTICS_FILE, data)

    def write_checkpoint(self, data: Dict[str, Any]) -> Path:
        self.ensure()
        target = self.write_json(CHECKPOINT_FILE, data)
        log_event("cli", "sample", "checkpoint", f"path={target} rounds={data.get('rounds')}", level="DEBUG")
        return target

    # ---------- simulate ----------

    def write_chromatogram(self, profile: Dict[str, np.ndarray], component_names: Sequence[str]) -> Path:
        self.ensure()
        frame = pd.DataFrame({
            "position_m": profile["position_m"],
            "train_position": profile["train_position"],
        })
        for i, name in enumerate(component_names):
            frame[f"c_{name}_mol_m3"] = profile["concentration"][i]
        target = self.path(CHROMATOGRAM_FILE)
        frame.to_csv(target, index=False)
        return target

    def write_performance(self, record: PerformanceRecord, extra: Optional[Dict[str, Any]] = None) -> Path:
        self.ensure()
        data = record.model_dump()
        data.update(extra or {})
        return self.write_json(PERFORMANCE_FILE, data)

    def load_performance(self) -> Dict[str, Any]:
        return self.read_json(PERFORMANCE_FILE)


def read_checkpoint(path) -> Dict[str, Any]:
    """Lee un checkpoint; ausente o ilegible -> CheckpointError"""
    path = Path(path)
    if path.is_dir():
        path = path / CHECKPOINT_FILE
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except FileNotFoundError:
        raise CheckpointError(f"checkpoint inexistente: {path}") from None
    except (OSError, json.JSONDecodeError) as e:
        raise CheckpointError(f"checkpoint ilegible: {path}: {e}") from e
    if not isinstance(data, dict) or "chains" not in data:
        raise CheckpointError(f"checkpoint sin cadenas: {path}")
    return data

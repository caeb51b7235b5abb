"""
Logging estructurado para smb-bayes.

Un árbol de loggers `smb_bayes.<area>` (transport, network, performance,
sampler, analysis, cli). Consola legible en desarrollo, JSON en producción;
el archivo rotativo siempre es JSON. Los handlers se crean con el primer
evento, no al importar.
"""
import json
import logging
import time
from datetime import datetime, timezone
from functools import lru_cache
from logging.handlers import RotatingFileHandler
from typing import Any

import numpy as np

import config

_ROOT = "smb_bayes"
_EVENT_FIELDS = ("area", "actor", "action", "detail", "data")
_STARTED = time.monotonic()


def _jsonable(value: Any) -> Any:
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, np.generic):
        return value.item()
    return str(value)


class _JSONFormatter(logging.Formatter):
    def format(self, record: logging.LogRecord) -> str:
        log_obj = {
            "timestamp": datetime.now(timezone.utc).isoformat(),
            "elapsed_s": round(record.relativeCreated / 1000.0, 3),
            "level": record.levelname,
            "logger": record.name,
            "message": record.getMessage(),
        }
        for field in _EVENT_FIELDS:
            if hasattr(record, field):
                log_obj[field] = getattr(record, field)
        if record.exc_info:
            log_obj["exception"] = self.formatException(record.exc_info)
        return json.dumps(log_obj, ensure_ascii=False, default=_jsonable)


class _HumanFormatter(logging.Formatter):
    """Una línea por evento: reloj de la corrida, nivel, área y mensaje."""

    COLORS = {
        "DEBUG": "\033[36m",
        "INFO": "\033[32m",
        "WARNING": "\033[33m",
        "ERROR": "\033[31m",
        "CRITICAL": "\033[35m",
    }
    RESET = "\033[0m"

    def format(self, record: logging.LogRecord) -> str:
        color = self.COLORS.get(record.levelname, "")
        clock = time.monotonic() - _STARTED
        area = getattr(record, "area", record.name.rpartition(".")[2])
        line = f"{color}+{clock:9.1f}s {record.levelname:<8}{self.RESET} {area:<11} {record.getMessage()}"
        data = getattr(record, "data", None)
        if data:
            line += "  " + " ".join(f"{k}={_short(v)}" for k, v in data.items())
        if record.exc_info:
            line += "\n" + self.formatException(record.exc_info)
        return line


def _short(value: Any) -> str:
    if isinstance(value, (float, np.floating)):
        return f"{value:.4g}"
    if isinstance(value, (list, tuple, np.ndarray)):
        return "[" + ",".join(_short(v) for v in value) + "]"
    return str(value)


@lru_cache(maxsize=1)
def _root_logger() -> logging.Logger:
    logger = logging.getLogger(_ROOT)
    level = getattr(logging, config.LOG_LEVEL, logging.INFO)
    logger.setLevel(level)
    logger.propagate = False

    console = logging.StreamHandler()
    console.setFormatter(_JSONFormatter() if config.ENV == "production" else _HumanFormatter())
    logger.addHandler(console)

    try:
        file_handler = RotatingFileHandler(config.LOG_FILE, maxBytes=5_000_000, backupCount=5, encoding="utf-8")
        file_handler.setFormatter(_JSONFormatter())
        logger.addHandler(file_handler)
    except OSError as e:
        logger.warning(f"No se pudo crear el archivo de log '{config.LOG_FILE}': {e}")

    return logger


def get_logger(area: str) -> logging.Logger:
    """Logger hijo `smb_bayes.<area>`; hereda handlers y nivel del raíz"""
    _root_logger()
    return logging.getLogger(f"{_ROOT}.{area}")


# ========== API PÚBLICA ==========

def log_event(
    area: str,
    actor: str,
    action: str,
    detail: str = "",
    level: str = "INFO",
    **data: Any,
) -> None:
    """
    Registra un evento del dominio.

    Args:
        area: Módulo que emite ("network", "sampler", "cli", ...)
        actor: Id de cadena ("chain-0"), comando ("simulate") o "network"
        action: Acción corta ("css_reached", "adapt", "checkpoint", ...)
        detail: Texto libre (opcional)
        level: Nivel de log
        **data: Campos numéricos del evento; van al JSON bajo "data"
    """
    logger = get_logger(area)
    log_level = getattr(logging, level.upper(), logging.INFO)
    if not logger.isEnabledFor(log_level):
        return
    message = f"{actor} | {action}"
    if detail:
        message += f" | {detail}"
    extra = {"area": area, "actor": actor, "action": action, "detail": detail}
    if data:
        extra["data"] = data
    logger.log(log_level, message, extra=extra)

"""
Tests del logging estructurado (logging_utils.py)
"""

import sys
from pathlib import Path

# Agregar directorio raíz al PYTHONPATH para imports
sys.path.insert(0, str(Path(__file__).parent.parent))

import json
import logging

import numpy as np

from utils.logging_utils import _HumanFormatter, _JSONFormatter, get_logger


def _record(**extra):
    record = logging.LogRecord("smb_bayes.sampler", logging.INFO, __file__, 1, "monitor | round", None, None)
    for key, value in extra.items():
        setattr(record, key, value)
    return record


class TestFormatters:
    """Campos de evento en JSON y en consola"""

    def test_json_carries_numpy_data(self):
        record = _record(area="sampler", actor="monitor", action="round",
                         data={"round": np.int64(3), "rhat": np.array([1.01, 1.2])})
        payload = json.loads(_JSONFormatter().format(record))
        assert payload["logger"] == "smb_bayes.sampler"
        assert payload["area"] == "sampler"
        assert payload["data"] == {"round": 3, "rhat": [1.01, 1.2]}

    def test_human_line_shows_area_and_fields(self):
        line = _HumanFormatter().format(_record(area="sampler", data={"metric": 1.23456e-5}))
        assert "sampler" in line
        assert "metric=1.235e-05" in line


class TestGetLogger:
    def test_child_of_package_logger(self):
        logger = get_logger("network")
        assert logger.name == "smb_bayes.network"
        assert logger.parent is logging.getLogger("smb_bayes")

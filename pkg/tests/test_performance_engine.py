"""
Tests del motor de desempeño (performance_engine.py)
"""

import sys
from pathlib import Path

# Agregar directorio raíz al PYTHONPATH para imports
sys.path.insert(0, str(Path(__file__).parent.parent))

import math

import numpy as np
import pytest

from models.core import ConcentrationProfile
from schemas.operating import OperatingPoint
from schemas.performance import ObjectiveSpec, PerformanceRecord
from schemas.plant import ColumnGeometry, NetworkConfig
from utils.errors import DegenerateSimulationError, InvalidInputError
from utils.network_engine import derive_flowrates
from utils.performance_engine import (
    indicators,
    log_likelihood,
    objective,
    period_average,
    with_objective,
)
from utils.presets import REFERENCE_OPERATING_POINT

NAMES = ["glc", "fru"]
FEED = 3052.8


def _record(purity_raffinate=1.0, purity_extract=1.0, yield_raffinate=1.0, yield_extract=1.0):
    return PerformanceRecord(
        component_names=NAMES,
        average_extract=[0.0, 1.0], average_raffinate=[1.0, 0.0],
        purity_extract=[1.0 - purity_extract, purity_extract],
        purity_raffinate=[purity_raffinate, 1.0 - purity_raffinate],
        yield_extract=[0.0, yield_extract], yield_raffinate=[yield_raffinate, 0.0],
        productivity_extract=[0.0, 1.0], productivity_raffinate=[1.0, 0.0],
    )


class TestPeriodAverage:
    """Promedio temporal de una traza sobre t_s"""

    def test_constant_trace(self):
        trace = ConcentrationProfile.constant([5.0, 2.0], 100.0, samples=11)
        assert period_average(trace, 100.0) == pytest.approx([5.0, 2.0])

    def test_triangle_trace(self):
        trace = ConcentrationProfile(np.array([0.0, 50.0, 100.0]), np.array([[0.0, 2.0, 0.0]]))
        assert period_average(trace, 100.0) == pytest.approx([1.0])

    def test_full_sine_period_averages_to_offset(self):
        t = np.linspace(0.0, 10.0, 2001)
        trace = ConcentrationProfile(t, (3.0 + np.sin(2 * np.pi * t / 10.0))[None, :])
        assert period_average(trace, 10.0) == pytest.approx([3.0], abs=1e-6)

    def test_longer_trace_uses_first_period(self):
        trace = ConcentrationProfile(np.array([0.0, 10.0, 20.0]), np.array([[1.0, 1.0, 9.0]]))
        assert period_average(trace, 10.0) == pytest.approx([1.0])

    def test_short_trace_rejected(self):
        trace = ConcentrationProfile.constant([1.0], 5.0)
        with pytest.raises(InvalidInputError):
            period_average(trace, 10.0)


class TestIndicators:
    """Pureza, rendimiento y productividad"""

    def setup_method(self):
        self.op = OperatingPoint(**REFERENCE_OPERATING_POINT)
        self.flows = derive_flowrates(self.op)
        self.config = NetworkConfig(feed_concentration=[FEED, FEED], desorbent_concentration=[0.0, 0.0])
        self.geometry = ColumnGeometry(length=0.536, diameter=0.026, particle_radius=1.625e-3,
                                       column_porosity=0.38, particle_porosity=1e-5)

    def _indicators(self, avg_e, avg_r):
        return indicators(avg_e, avg_r, self.flows, self.op, self.config, self.geometry, NAMES)

    def test_purities_sum_to_one(self):
        record = self._indicators([1.0, 99.0], [80.0, 2.0])
        assert record.purity_extract == pytest.approx([0.01, 0.99])
        assert sum(record.purity_raffinate) == pytest.approx(1.0)

    def test_complete_split_yields_one(self):
        fed = self.flows.feed * FEED
        record = self._indicators([0.0, fed / self.flows.extract], [fed / self.flows.raffinate, 0.0])
        assert record.yield_extract == pytest.approx([0.0, 1.0])
        assert record.yield_raffinate == pytest.approx([1.0, 0.0])
        assert record.purity_extract == pytest.approx([0.0, 1.0])

    def test_productivity_uses_bed_volume(self):
        record = self._indicators([1.0, 1.0], [1.0, 1.0])
        bed = (1 - 0.38) * self.geometry.column_volume * 8
        assert record.productivity_extract[0] == pytest.approx(self.flows.extract / bed)
        assert record.productivity_raffinate[1] == pytest.approx(self.flows.raffinate / bed)

    def test_zero_port_is_degenerate(self):
        with pytest.raises(DegenerateSimulationError):
            self._indicators([0.0, 0.0], [1.0, 1.0])

    def test_negative_average_rejected(self):
        with pytest.raises(InvalidInputError):
            self._indicators([-1.0, 1.0], [1.0, 1.0])

    def test_unfed_component_has_zero_yield(self):
        self.config = NetworkConfig(feed_concentration=[FEED, 0.0], desorbent_concentration=[0.0, 0.0])
        fed = self.flows.feed * FEED
        record = self._indicators([0.5, 0.0], [fed / self.flows.raffinate, 0.0])
        assert record.yield_raffinate == pytest.approx([1.0, 0.0])
        assert record.yield_extract[1] == 0.0
        assert record.purity_raffinate == pytest.approx([1.0, 0.0])

    def test_no_fed_component_rejected(self):
        self.config = NetworkConfig(feed_concentration=[0.0, 0.0], desorbent_concentration=[0.0, 0.0])
        with pytest.raises(InvalidInputError):
            self._indicators([1.0, 1.0], [1.0, 1.0])


class TestObjective:
    """H = f + d_k·g"""

    def test_perfect_separation(self):
        f, g, h = objective(_record(), ObjectiveSpec())
        assert (f, g, h) == (-2.0, 0.0, -2.0)

    def test_purity_penalty(self):
        spec = ObjectiveSpec(purity_raffinate=0.999, purity_extract=0.999, penalty_factor=100.0)
        f, g, h = objective(_record(purity_extract=0.90), spec)
        assert f == pytest.approx(-2.0)
        assert g == pytest.approx(9.801e-3)
        assert h == pytest.approx(-1.0199)

    def test_penalty_vanishes_above_threshold(self):
        _, g, _ = objective(_record(purity_raffinate=0.995, purity_extract=0.992), ObjectiveSpec())
        assert g == 0.0

    def test_with_objective_fills_record(self):
        record = with_objective(_record(yield_raffinate=0.5), ObjectiveSpec())
        assert record.f == pytest.approx(-1.5)
        assert record.h == pytest.approx(-1.5)


class TestLogLikelihood:
    def test_values(self):
        assert log_likelihood(-2.0) == pytest.approx(1.0)
        assert log_likelihood(4.0) == pytest.approx(-2.0)

    def test_non_finite_rejected(self):
        with pytest.raises(InvalidInputError):
            log_likelihood(math.nan)

"""
Tests del motor de análisis (analysis_engine.py)
"""

import sys
from pathlib import Path

# Agregar directorio raíz al PYTHONPATH para imports
sys.path.insert(0, str(Path(__file__).parent.parent))

import numpy as np
import pandas as pd
import pytest
from scipy.integrate import trapezoid

from models.core import FlowrateRatios, Region
from schemas.operating import PARAMETER_COLUMNS, OperatingPoint
from schemas.plant import ColumnGeometry, LinearIsotherm
from utils.analysis_engine import (
    DEFAULT_PARETO_PAIRS,
    characteristic_points,
    ci_table,
    classify_operating_point,
    classify_region,
    derived_flows,
    flowrate_ratios,
    linear_fit,
    marginal_density,
    pareto_front,
    ppc_envelope,
    purity_class,
    ratio_difference_histogram,
    resolve_axis,
    triangle_table,
)
from utils.errors import AnalysisError, InsufficientSamplesError, IntegratorError, InvalidInputError
from utils.presets import REFERENCE_OPERATING_POINT

ISOTHERM = LinearIsotherm(henry=[0.28, 0.54], component_names=["glc", "fru"])
GEOMETRY = ColumnGeometry(length=0.536, diameter=0.026, particle_radius=1.625e-3,
                          column_porosity=0.38, particle_porosity=1e-5)


def _reference_frame(rows=1):
    op = OperatingPoint(**REFERENCE_OPERATING_POINT)
    frame = pd.DataFrame([op.to_vector()] * rows, columns=list(PARAMETER_COLUMNS))
    frame["Pu_fru_E"] = 0.995
    frame["Pu_glc_R"] = 0.9995
    return frame


def _ratios(m_ii, m_iii):
    return FlowrateRatios(m_I=1.0, m_II=m_ii, m_III=m_iii, m_IV=0.1)


class TestFlowrateRatios:
    """Razones m_j del punto de referencia"""

    def test_reference_point(self):
        ratios = flowrate_ratios(OperatingPoint(**REFERENCE_OPERATING_POINT), GEOMETRY)
        assert ratios.m_II == pytest.approx(0.308, abs=1e-3)
        assert ratios.m_III == pytest.approx(0.484, abs=1e-3)
        assert ratios.m_IV == pytest.approx(0.250, abs=1e-3)
        assert ratios.m_I == pytest.approx(0.614, abs=1e-3)

    def test_reference_point_is_region_a(self):
        ratios = classify_operating_point(OperatingPoint(**REFERENCE_OPERATING_POINT), GEOMETRY, ISOTHERM)
        assert ratios.region == Region.A


class TestClassifyRegion:
    @pytest.mark.parametrize("m_ii, m_iii, region", [
        (0.30, 0.50, Region.A),
        (0.20, 0.50, Region.C),
        (0.50, 0.40, Region.D),
        (0.30, 0.60, Region.B),
        (0.20, 0.60, Region.E),
    ])
    def test_regions(self, m_ii, m_iii, region):
        assert classify_region(_ratios(m_ii, m_iii), ISOTHERM) == region

    def test_boundaries_are_not_region_a(self):
        assert classify_region(_ratios(0.28, 0.50), ISOTHERM) == Region.C
        assert classify_region(_ratios(0.30, 0.54), ISOTHERM) == Region.B
        assert classify_region(_ratios(0.40, 0.40), ISOTHERM) == Region.D


class TestPurityClass:
    def test_classes(self):
        assert purity_class(0.9995, 0.9991) == "99.9"
        assert purity_class(0.9995, 0.995) == "99"
        assert purity_class(0.98, 0.9995) == "below"


class TestTriangleTable:
    def test_reference_rows(self):
        table = triangle_table(_reference_frame(3), GEOMETRY, ISOTHERM, "fru", "glc")
        assert list(table.columns) == ["m_I", "m_II", "m_III", "m_IV", "region", "purity_class"]
        assert len(table) == 3
        assert (table["region"] == "A").all()
        assert (table["purity_class"] == "99").all()


class TestParetoFront:
    """Frente no dominado maximizando ambos ejes"""

    def test_small_example(self):
        pareto = pareto_front(np.array([[1, 1], [2, 0.5], [0.5, 2], [1.5, 1.5]]))
        assert sorted(pareto.front) == [1, 2, 3]
        assert pareto.dominated == [0]

    def test_single_point(self):
        assert pareto_front(np.array([[0.3, 0.7]])).front == [0]

    def test_duplicates_are_kept(self):
        pareto = pareto_front(np.array([[1.0, 1.0], [1.0, 1.0], [0.5, 0.5]]))
        assert pareto.front == [0, 1]

    def test_matches_brute_force(self):
        points = np.random.default_rng(4).random((60, 2))
        expected = [
            i for i, p in enumerate(points)
            if not any(np.all(q >= p) and np.any(q > p) for q in points)
        ]
        assert pareto_front(points).front == expected

    def test_empty_rejected(self):
        with pytest.raises(AnalysisError):
            pareto_front(np.empty((0, 2)))

    def test_non_finite_rejected(self):
        with pytest.raises(AnalysisError):
            pareto_front(np.array([[np.nan, 1.0]]))

    def test_default_axes_resolve_to_components(self):
        assert resolve_axis(DEFAULT_PARETO_PAIRS[0][0], ["glc", "fru"]) == "Pu_fru_E"
        assert resolve_axis(DEFAULT_PARETO_PAIRS[1][0], ["glc", "fru"]) == "Pu_glc_R"


class TestMarginalDensity:
    def test_standard_normal(self):
        samples = np.random.default_rng(8).normal(size=5000)
        density = marginal_density(samples)
        assert np.interp(0.0, density.grid, density.density) == pytest.approx(0.3989, abs=0.02)
        assert trapezoid(density.density, density.grid) == pytest.approx(1.0, abs=5e-3)
        assert density.mode == pytest.approx(0.0, abs=0.15)

    def test_constant_samples_rejected(self):
        with pytest.raises(InsufficientSamplesError):
            marginal_density(np.ones(10))


class TestTables:
    def test_derived_flows(self):
        flows = derived_flows(_reference_frame())
        assert flows.loc[0, "Q_R_m3_s"] == pytest.approx(2.66e-8)
        assert flows.loc[0, "Q_II_m3_s"] == pytest.approx(1.047e-7)
        assert flows.loc[0, "Q_III_m3_s"] == pytest.approx(1.247e-7)
        assert flows.loc[0, "Q_IV_m3_s"] == pytest.approx(9.81e-8)

    def test_ci_table_schema(self):
        rng = np.random.default_rng(1)
        frame = pd.DataFrame({"a": rng.normal(10.0, 1.0, 500), "b": rng.normal(5.0, 0.5, 500)})
        table = ci_table(frame, ["a", "b"])
        assert list(table.columns) == ["parameter", "mu", "lower", "upper",
                                       "lower_deviation_pct", "upper_deviation_pct"]
        assert (table["lower"] < table["mu"]).all()
        assert (table["mu"] < table["upper"]).all()
        assert (table["lower_deviation_pct"] < 0).all()


class TestLinearFit:
    def test_exact_line(self):
        fit = linear_fit([0.0, 1.0, 2.0, 3.0], [1.0, 3.0, 5.0, 7.0])
        assert fit.slope == pytest.approx(2.0)
        assert fit.intercept == pytest.approx(1.0)
        assert fit.r_squared == pytest.approx(1.0)

    def test_constant_response(self):
        fit = linear_fit([0.0, 1.0, 2.0], [4.0, 4.0, 4.0])
        assert fit.slope == pytest.approx(0.0)
        assert fit.r_squared == pytest.approx(0.0)

    def test_single_x_rejected(self):
        with pytest.raises(AnalysisError):
            linear_fit([1.0, 1.0], [2.0, 3.0])


class TestRatioHistogram:
    def test_identical_values(self):
        ratios = pd.DataFrame({"m_I": [0.6] * 4, "m_II": [0.3] * 4, "m_III": [0.45] * 4, "m_IV": [0.25] * 4})
        hist = ratio_difference_histogram(ratios, "III-II")
        assert hist.edges == pytest.approx([0.15, 0.15])
        assert hist.counts.tolist() == [4]
        assert hist.mode == pytest.approx(0.15)

    def test_mode_of_normal_differences(self):
        rng = np.random.default_rng(6)
        m_ii = rng.uniform(0.29, 0.32, 2000)
        ratios = pd.DataFrame({"m_II": m_ii, "m_III": m_ii + rng.normal(0.15, 0.01, 2000)})
        hist = ratio_difference_histogram(ratios, "III-II")
        assert hist.mode == pytest.approx(0.15, abs=0.005)
        assert hist.counts.sum() == 2000

    def test_unknown_pair(self):
        with pytest.raises(AnalysisError):
            ratio_difference_histogram(pd.DataFrame({"m_I": [1.0]}), "II-IV")


class TestCharacteristicPoints:
    def test_extremes_of_purity_front(self):
        frame = pd.DataFrame({
            "Pu_fru_E": [0.99, 0.999, 0.95, 0.98],
            "Pu_glc_R": [0.99, 0.95, 0.999, 0.97],
            "log_posterior": [1.0, 0.2, 0.3, 0.1],
        })
        points = characteristic_points(frame, "fru", "glc")
        assert points == {"max_posterior": 0, "max_extract_purity": 1, "max_raffinate_purity": 2}


class TestPpcEnvelope:
    """Envolvente predictiva con un simulador de juguete"""

    def test_identical_replicates_give_zero_width(self):
        profile = np.arange(2 * 8 * 4, dtype=float).reshape(2, 32)
        envelope = ppc_envelope(np.ones((5, 6)), 10, lambda theta: profile, 8, np.random.default_rng(0))
        assert np.array_equal(envelope.lower, envelope.upper)
        assert envelope.replicates == 10
        assert envelope.positions[0] == pytest.approx(0.125)
        assert envelope.positions[-1] == pytest.approx(7.875)

    def test_envelope_contains_every_replicate(self):
        samples = np.linspace(1.0, 2.0, 20)[:, None] * np.ones((1, 6))
        envelope = ppc_envelope(samples, 8, lambda theta: theta[0] * np.ones((2, 16)), 8,
                                np.random.default_rng(3), threads=2)
        for profile in envelope.profiles:
            assert np.all(envelope.lower <= profile)
            assert np.all(profile <= envelope.upper)

    def test_max_posterior_profile_inside_envelope(self):
        samples = np.linspace(1.0, 2.0, 21)[:, None] * np.ones((1, 6))
        log_posterior = -((samples[:, 0] - 1.5) ** 2)
        best = int(np.argmax(log_posterior))
        envelope = ppc_envelope(samples, 6, lambda theta: theta[0] * np.ones((2, 16)), 8,
                                np.random.default_rng(5), threads=2, anchor=best)
        assert envelope.anchor_profile == pytest.approx(1.5 * np.ones((2, 16)))
        assert np.all(envelope.lower <= envelope.anchor_profile)
        assert np.all(envelope.anchor_profile <= envelope.upper)
        assert envelope.replicates == 6

    def test_anchor_out_of_range(self):
        with pytest.raises(InvalidInputError):
            ppc_envelope(np.ones((3, 6)), 4, lambda theta: np.ones((2, 16)), 8,
                         np.random.default_rng(0), anchor=3)

    def test_failed_replicates_are_skipped(self):
        def flaky(theta):
            if theta[0] > 1.5:
                raise IntegratorError("fallo")
            return np.ones((2, 16))

        samples = np.array([[1.0] * 6, [2.0] * 6])
        with pytest.raises(InsufficientSamplesError):
            ppc_envelope(samples[1:], 4, flaky, 8, np.random.default_rng(0))

    def test_single_replicate_rejected(self):
        with pytest.raises(InsufficientSamplesError):
            ppc_envelope(np.ones((3, 6)), 1, lambda theta: np.ones((2, 16)), 8, np.random.default_rng(0))

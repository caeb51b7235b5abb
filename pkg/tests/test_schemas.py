"""
Tests de los schemas Pydantic (planta, punto de operación, configuración)
y de los presets empaquetados.
"""

import sys
from pathlib import Path

# Agregar directorio raíz al PYTHONPATH para imports
sys.path.insert(0, str(Path(__file__).parent.parent))

import math

import pytest
from pydantic import ValidationError

from schemas.operating import OperatingPoint, ParameterBounds, PriorSpec
from schemas.performance import PerformanceRecord
from schemas.plant import ColumnGeometry, LinearIsotherm, NetworkConfig
from schemas.run_config import RunConfig, SamplerSettings
from utils.errors import InvalidInputError
from utils.presets import (
    REFERENCE_BOUNDS,
    REFERENCE_OPERATING_POINT,
    load_run_config,
    merge_documents,
    preset_document,
)


class TestColumnGeometry:
    """Propiedades derivadas de la geometría"""

    def test_total_porosity_with_edm_particle_porosity(self):
        geo = ColumnGeometry(length=0.536, diameter=0.026, particle_radius=1.625e-3,
                             column_porosity=0.38, particle_porosity=1e-5)
        assert geo.total_porosity == pytest.approx(0.380006, abs=1e-6)

    def test_column_volume(self):
        geo = ColumnGeometry(length=0.536, diameter=0.026, particle_radius=1.625e-3,
                             column_porosity=0.38, particle_porosity=0.0)
        assert geo.column_volume == pytest.approx(0.536 * math.pi * 0.026 ** 2 / 4)
        assert geo.with_length(0.6).column_volume == pytest.approx(0.6 * math.pi * 0.026 ** 2 / 4)

    def test_porosity_out_of_range_rejected(self):
        with pytest.raises(ValidationError):
            ColumnGeometry(length=0.5, diameter=0.026, particle_radius=1e-3,
                           column_porosity=1.2, particle_porosity=0.0)


class TestLinearIsotherm:
    def test_default_component_names(self):
        iso = LinearIsotherm(henry=[0.28, 0.54])
        assert iso.component_names == ["c0", "c1"]

    def test_requires_ascending_henry(self):
        with pytest.raises(ValidationError):
            LinearIsotherm(henry=[0.54, 0.28])

    def test_tracer_component_allowed(self):
        assert LinearIsotherm(henry=[0.0, 0.54]).n_components == 2


class TestNetworkConfig:
    def test_zone_without_columns_rejected(self):
        with pytest.raises(ValidationError):
            NetworkConfig(zone_layout=[2, 0, 2, 2], feed_concentration=[1, 1], desorbent_concentration=[0, 0])

    def test_counts(self):
        net = NetworkConfig(zone_layout=[1, 2, 3, 2], feed_concentration=[1, 1], desorbent_concentration=[0, 0])
        assert net.n_columns == 8
        assert net.n_components == 2


class TestOperatingPoint:
    """Vector de decisión θ y cotas"""

    def test_vector_order(self):
        op = OperatingPoint(**REFERENCE_OPERATING_POINT)
        theta = op.to_vector()
        assert theta.tolist() == [0.536, 1552.0, 1.395e-7, 2.0e-8, 4.14e-8, 3.48e-8]
        assert OperatingPoint.from_vector(theta) == op

    def test_outside_bounds_names_parameter(self):
        bounds = ParameterBounds(**REFERENCE_BOUNDS)
        values = dict(REFERENCE_OPERATING_POINT, switch_time=1700.0)
        with pytest.raises(ValidationError) as exc:
            OperatingPoint(**values, bounds=bounds)
        assert "switch_time" in str(exc.value)

    def test_wrong_dimension(self):
        with pytest.raises(ValueError):
            OperatingPoint.from_vector([1.0, 2.0])


class TestPriorSpec:
    def test_uniform_box(self):
        prior = PriorSpec(bounds=ParameterBounds(lower=[0.0, 0.0], upper=[1.0, 2.0]))
        assert prior.log_density([0.5, 1.0]) == 0.0
        assert prior.log_density([1.0, 2.0]) == 0.0
        assert prior.log_density([1.5, 1.0]) == -math.inf
        assert prior.log_density([float("nan"), 1.0]) == -math.inf

    def test_lower_must_be_below_upper(self):
        with pytest.raises(ValidationError):
            ParameterBounds(lower=[1.0], upper=[1.0])


class TestSamplerSettings:
    def test_budget_zero_rejected(self):
        with pytest.raises(ValidationError):
            SamplerSettings(budget=0, burn_in=0)

    def test_burn_in_must_be_below_budget(self):
        with pytest.raises(ValidationError):
            SamplerSettings(budget=50, burn_in=50)

    def test_burn_in_fraction_takes_precedence(self):
        settings = SamplerSettings(budget=400, burn_in=10, burn_in_fraction=0.25)
        assert settings.effective_burn_in() == 100


class TestPerformanceRecord:
    def test_row_columns_carry_units(self):
        record = PerformanceRecord.zeros(["glc", "fru"])
        row = record.to_row()
        assert "Pu_fru_E" in row
        assert "Pr_glc_R_mol_m3_s" in row
        assert "cavg_fru_R_mol_m3" in row

    def test_from_row_inverts_to_row(self):
        record = PerformanceRecord(
            component_names=["glc", "fru"],
            average_extract=[1.0, 99.0], average_raffinate=[80.0, 2.0],
            purity_extract=[0.01, 0.99], purity_raffinate=[80 / 82, 2 / 82],
            yield_extract=[0.02, 0.97], yield_raffinate=[0.98, 0.03],
            productivity_extract=[1e-4, 3e-2], productivity_raffinate=[3e-2, 1e-4],
            f=-1.95, g=0.0, h=-1.95,
        )
        assert PerformanceRecord.from_row(record.to_row(), ["glc", "fru"], f=-1.95, g=0.0, h=-1.95) == record

    def test_indicator_lookup(self):
        record = PerformanceRecord.zeros(["glc", "fru"]).model_copy(update={"purity_extract": [0.1, 0.9]})
        assert record.indicator("Pu", "fru", "E") == 0.9


class TestRunConfig:
    """Documento de configuración y presets"""

    def test_reference_preset_is_valid(self):
        config = load_run_config(preset="klatt-reference")
        assert config.plant.geometry.particle_porosity == 1e-5
        assert config.plant.transport.film_transfer == [1.6e4, 1.6e4]
        assert config.solver.discretization.abs_tol == 1e-10
        assert config.network_config().n_columns == 8
        assert config.operating_point.length == 0.536

    def test_written_config_reparses_identically(self):
        config = load_run_config(preset="klatt-reference")
        again = RunConfig.model_validate_json(config.model_dump_json())
        assert again == config

    def test_purity_preset(self):
        config = load_run_config(preset="klatt-reference-999")
        assert config.objective.purity_extract == 0.999

    def test_desk_scale_preset(self):
        config = load_run_config(preset="desk-scale")
        assert config.solver.discretization.n_axial == 20
        assert config.solver.discretization.mode.value == "edm-equilibrium"
        assert config.sampler.budget == 100
        assert config.sampler.burn_in == 25

    def test_validation_error_has_field_path(self):
        document = {"plant": {"geometry": {"length": -1.0}}}
        with pytest.raises(ValidationError) as exc:
            load_run_config(document, preset="klatt-reference")
        locations = [err["loc"] for err in exc.value.errors()]
        assert ("plant", "geometry", "length") in locations

    def test_component_mismatch_rejected(self):
        document = {"plant": {"isotherm": {"henry": [0.1, 0.2, 0.3], "component_names": ["a", "b", "c"]}}}
        with pytest.raises(ValidationError):
            load_run_config(document, preset="klatt-reference")

    def test_plant_rejects_zero_henry(self):
        document = {"plant": {"isotherm": {"henry": [0.0, 0.54], "component_names": ["glc", "fru"]}}}
        with pytest.raises(ValidationError) as exc:
            load_run_config(document, preset="klatt-reference")
        assert ("plant", "isotherm") in [err["loc"] for err in exc.value.errors()]

    def test_unknown_preset(self):
        with pytest.raises(InvalidInputError):
            preset_document("does-not-exist")

    def test_merge_overrides_nested_values(self):
        merged = merge_documents({"a": {"b": 1, "c": 2}}, {"a": {"c": 3}})
        assert merged == {"a": {"b": 1, "c": 3}}

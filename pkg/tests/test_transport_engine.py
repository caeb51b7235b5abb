"""
Tests del motor de transporte (transport_engine.py)

Oráculos analíticos de cromatografía lineal:
- conservación de masa con un trazador (H = 0)
- tiempo de retención por primer momento t_R = (L/u)·(1 + F·H)
- acuerdo entre el GRM con el preset EDM y el modo edm-equilibrium
"""

import sys
from pathlib import Path

# Agregar directorio raíz al PYTHONPATH para imports
sys.path.insert(0, str(Path(__file__).parent.parent))

import numpy as np
import pytest
from scipy.integrate import trapezoid

from models.core import ColumnState, ConcentrationProfile
from schemas.plant import (
    ColumnGeometry,
    Discretization,
    DiscretizationMode,
    LinearIsotherm,
    TransportParams,
)
from utils.errors import InvalidInputError
from utils.transport_engine import (
    EDM_FILM_TRANSFER,
    EDM_PARTICLE_POROSITY,
    EDM_PORE_DIFFUSION,
    build_grid,
    column_inventory,
    edm_limit_preset,
    integrate_period,
    jacobian_sparsity,
)


def _geometry(length=0.536, particle_porosity=EDM_PARTICLE_POROSITY):
    return ColumnGeometry(length=length, diameter=0.026, particle_radius=1.625e-3,
                          column_porosity=0.38, particle_porosity=particle_porosity)


def _params(velocity, n_components=1, dispersion=1e-7):
    return TransportParams(
        axial_dispersion=dispersion,
        pore_diffusion=[EDM_PORE_DIFFUSION] * n_components,
        film_transfer=[EDM_FILM_TRANSFER] * n_components,
        interstitial_velocity=velocity,
    )


def _pulse(width, horizon, height=1.0):
    """Pulso rectangular de ancho `width` con un flanco de bajada corto"""
    edge = 1e-3 * width
    times = np.array([0.0, width, width + edge, horizon])
    return ConcentrationProfile(times, np.array([[height, height, 0.0, 0.0]]))


def _first_moment(n_axial, henry):
    """(primer momento de la salida corregido por el pulso, t_R analítico) a Q_II de referencia"""
    geo = _geometry()
    u = 1.047e-7 / (geo.column_porosity * geo.cross_section)
    disc = Discretization(n_axial=n_axial, mode=DiscretizationMode.EDM_EQUILIBRIUM,
                          samples_per_period=4000, max_step=5.0)
    op = build_grid(geo, disc)
    width, horizon = 20.0, 4000.0
    _, outlet = integrate_period(ColumnState.empty(1, n_axial, 1), _pulse(width, horizon), _params(u),
                                 LinearIsotherm(henry=[henry]), horizon, op)
    t, c = outlet.times, outlet.values[0]
    moment = trapezoid(t * c, t) / trapezoid(c, t) - width / 2
    return moment, geo.length / u * (1.0 + geo.phase_ratio * henry)

class TestBuildGrid:
    """Malla axial y radial"""

    def test_forty_cells_one_shell(self):
        op = build_grid(_geometry(), Discretization(n_axial=40, n_radial=1))
        assert op.n_axial == 40
        assert op.n_radial == 1
        assert op.cell_width == pytest.approx(0.0134)
        assert op.shell_fractions.tolist() == [1.0]

    def test_two_cells_uniform(self):
        op = build_grid(_geometry(), Discretization(n_axial=2))
        assert op.cell_width == pytest.approx(0.536 / 2)
        assert op.cell_centers == pytest.approx([0.134, 0.402])

    def test_shell_fractions_sum_to_one(self):
        op = build_grid(_geometry(), Discretization(n_axial=4, n_radial=5))
        assert op.shell_fractions.sum() == pytest.approx(1.0)
        # el operador radial conserva masa ponderada por volumen de capa
        weighted = op.shell_fractions @ op.radial_diffusion
        assert np.allclose(weighted, 0.0, atol=1e-6 * np.abs(op.radial_diffusion).max())

    def test_sparsity_shape(self):
        disc = Discretization(n_axial=6, n_radial=3)
        op = build_grid(_geometry(), disc)
        pattern = jacobian_sparsity(op, 2)
        n = 2 * 6 + 2 * 6 * 3
        assert pattern.shape == (n, n)


class TestEdmLimitPreset:
    def test_preset_values(self):
        disc, overrides = edm_limit_preset()
        assert disc.n_radial == 1
        assert disc.mode == DiscretizationMode.GRM
        assert disc.abs_tol == 1e-10
        assert disc.rel_tol == 1e-6
        assert disc.initial_step == 1e-14
        assert disc.max_step == 5e6
        assert overrides.particle_porosity == 1e-5
        assert overrides.pore_diffusion == 5e-5
        assert overrides.film_transfer == 1.6e4

    def test_total_porosity_after_overrides(self):
        _, overrides = edm_limit_preset()
        geo = overrides.apply_geometry(_geometry(particle_porosity=0.5))
        assert geo.total_porosity == pytest.approx(0.38 + 1e-5 * 0.62)


class TestIntegratePeriod:
    """Integración de una columna durante un período"""

    def test_homogeneous_problem(self):
        disc = Discretization(n_axial=10, samples_per_period=20)
        op = build_grid(_geometry(), disc)
        state = ColumnState.empty(2, 10, 1)
        inlet = ConcentrationProfile.zeros(2, 100.0)
        iso = LinearIsotherm(henry=[0.28, 0.54])
        new_state, outlet = integrate_period(state, inlet, _params(1e-3, 2), iso, 100.0, op)
        assert not np.any(outlet.values)
        assert outlet.values.shape == (2, 21)
        assert new_state.time == 100.0

    def test_tracer_mass_conservation(self):
        geo = _geometry(length=0.1)
        disc = Discretization(n_axial=40, mode=DiscretizationMode.EDM_EQUILIBRIUM,
                              samples_per_period=2000, max_step=1.0)
        op = build_grid(geo, disc)
        inlet = _pulse(10.0, 400.0)
        _, outlet = integrate_period(ColumnState.empty(1, 40, 1), inlet, _params(1e-3),
                                     LinearIsotherm(henry=[0.0]), 400.0, op)
        injected = trapezoid(inlet.values[0], inlet.times)
        eluted = trapezoid(outlet.values[0], outlet.times)
        assert eluted == pytest.approx(injected, rel=1e-3)

    @pytest.mark.parametrize("henry", [0.28, 0.54])
    def test_first_moment_retention(self, henry):
        moment, expected = _first_moment(40, henry)
        assert moment == pytest.approx(expected, rel=0.01)

    def test_grid_convergence(self):
        # Errores del primer momento al dividir el ancho de celda por dos: 10 -> 20 -> 40 celdas
        errors = [abs(np.subtract(*_first_moment(n, 0.54))) for n in (10, 20, 40)]
        assert errors[0] / errors[1] >= 1.8
        assert errors[1] / errors[2] >= 1.8

    def test_grm_with_edm_preset_matches_equilibrium_mode(self):
        geo = _geometry(length=0.2)
        u = 1e-3
        horizon = 600.0
        traces = []
        for mode in (DiscretizationMode.GRM, DiscretizationMode.EDM_EQUILIBRIUM):
            disc = Discretization(n_axial=20, n_radial=1, mode=mode, samples_per_period=600, max_step=2.0)
            op = build_grid(geo, disc)
            _, outlet = integrate_period(ColumnState.empty(1, 20, 1), _pulse(20.0, horizon), _params(u),
                                         LinearIsotherm(henry=[0.54]), horizon, op)
            traces.append(outlet.values[0])
        peak = traces[1].max()
        assert np.max(np.abs(traces[0] - traces[1])) < 0.01 * peak

    def test_inventory_matches_injected_moles(self):
        geo = _geometry(length=0.2)
        disc = Discretization(n_axial=20, mode=DiscretizationMode.EDM_EQUILIBRIUM, max_step=1.0)
        op = build_grid(geo, disc)
        u = 1e-3
        # El pulso todavía está dentro de la columna al final del período
        horizon = 50.0
        inlet = _pulse(10.0, horizon)
        state, outlet = integrate_period(ColumnState.empty(1, 20, 1), inlet, _params(u),
                                         LinearIsotherm(henry=[0.28]), horizon, op)
        flow = u * geo.column_porosity * geo.cross_section
        fed = flow * trapezoid(inlet.values[0], inlet.times)
        left = flow * trapezoid(outlet.values[0], outlet.times)
        assert column_inventory(state, op, LinearIsotherm(henry=[0.28]))[0] == pytest.approx(fed - left, rel=1e-3)

    def test_non_negative_trace(self):
        geo = _geometry(length=0.1)
        disc = Discretization(n_axial=20, mode=DiscretizationMode.EDM_EQUILIBRIUM, max_step=1.0)
        op = build_grid(geo, disc)
        _, outlet = integrate_period(ColumnState.empty(1, 20, 1), _pulse(5.0, 300.0), _params(1e-3),
                                     LinearIsotherm(henry=[0.54]), 300.0, op)
        assert outlet.values.min() >= 0.0

    def test_grm_porous_shells_conserve_mass(self):
        geo = _geometry(length=0.1, particle_porosity=0.5)
        disc = Discretization(n_axial=20, n_radial=4, mode=DiscretizationMode.GRM,
                              samples_per_period=2000, max_step=1.0)
        op = build_grid(geo, disc)
        iso = LinearIsotherm(henry=[0.28])
        inlet = _pulse(10.0, 1000.0)
        state, outlet = integrate_period(ColumnState.empty(1, 20, 4), inlet, _params(1e-3), iso, 1000.0, op)
        injected = trapezoid(inlet.values[0], inlet.times)
        eluted = trapezoid(outlet.values[0], outlet.times)
        assert eluted == pytest.approx(injected, rel=1e-3)
        assert outlet.values.min() >= 0.0
        assert state.cp.min() >= 0.0

    def test_grm_shell_inventory_while_pulse_inside(self):
        geo = _geometry(length=0.1, particle_porosity=0.5)
        disc = Discretization(n_axial=20, n_radial=4, mode=DiscretizationMode.GRM, max_step=1.0)
        op = build_grid(geo, disc)
        iso = LinearIsotherm(henry=[0.28])
        u = 1e-3
        inlet = _pulse(10.0, 60.0)
        state, outlet = integrate_period(ColumnState.empty(1, 20, 4), inlet, _params(u), iso, 60.0, op)
        flow = u * geo.column_porosity * geo.cross_section
        fed = flow * trapezoid(inlet.values[0], inlet.times)
        left = flow * trapezoid(outlet.values[0], outlet.times)
        assert np.any(state.cp > 0.0)
        assert column_inventory(state, op, iso)[0] == pytest.approx(fed - left, rel=1e-3)

    def test_non_positive_horizon(self):
        op = build_grid(_geometry(), Discretization(n_axial=4))
        with pytest.raises(InvalidInputError):
            integrate_period(ColumnState.empty(1, 4, 1), ConcentrationProfile.zeros(1, 10.0),
                             _params(1e-3), LinearIsotherm(henry=[0.5]), 0.0, op)

    def test_inlet_must_cover_horizon(self):
        op = build_grid(_geometry(), Discretization(n_axial=4))
        with pytest.raises(InvalidInputError):
            integrate_period(ColumnState.empty(1, 4, 1), ConcentrationProfile.constant([1.0], 5.0),
                             _params(1e-3), LinearIsotherm(henry=[0.5]), 10.0, op)

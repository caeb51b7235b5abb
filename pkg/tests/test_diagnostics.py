"""
Tests de diagnósticos de convergencia (diagnostics.py)
"""

import sys
from pathlib import Path

# Agregar directorio raíz al PYTHONPATH para imports
sys.path.insert(0, str(Path(__file__).parent.parent))

import numpy as np
import pytest

from models.core import SampleRow, SampleStore
from utils.diagnostics import (
    acceptance_statistics,
    autocorrelation,
    autocorrelation_curve,
    credible_interval,
    effective_sample_size,
    gelman_rhat,
    summarize,
)
from utils.errors import DiagnosticsError, InsufficientSamplesError


def _ar1(rng, phi, length):
    x = np.empty(length)
    x[0] = rng.normal()
    for t in range(1, length):
        x[t] = phi * x[t - 1] + rng.normal()
    return x


class TestGelmanRhat:
    """R̂ con casos calculados a mano"""

    def test_identical_chains(self):
        chains = np.array([[1, 2, 3, 4], [1, 2, 3, 4]], dtype=float)
        assert gelman_rhat(chains) == pytest.approx(0.8660, abs=1e-4)

    def test_shifted_chains(self):
        chains = np.array([[1, 2, 3, 4], [2, 3, 4, 5]], dtype=float)
        assert gelman_rhat(chains) == pytest.approx(1.0247, abs=1e-4)

    def test_constant_chains_are_undefined(self):
        with pytest.raises(DiagnosticsError):
            gelman_rhat(np.ones((2, 10)))

    def test_single_chain_rejected(self):
        with pytest.raises(InsufficientSamplesError):
            gelman_rhat(np.arange(10.0)[None, :])

    def test_well_mixed_chains_near_one(self):
        rng = np.random.default_rng(3)
        assert gelman_rhat(rng.normal(size=(4, 2000))) == pytest.approx(1.0, abs=0.01)


class TestAutocorrelation:
    def test_alternating_sequence(self):
        x = np.tile([1.0, -1.0], 50)
        assert autocorrelation(x, 0) == pytest.approx(1.0)
        assert autocorrelation(x, 1) == pytest.approx(-0.99)

    def test_ar1_lag_one(self):
        x = _ar1(np.random.default_rng(11), 0.5, 20000)
        assert autocorrelation(x, 1) == pytest.approx(0.5, abs=0.03)

    def test_curve_matches_direct_estimator(self):
        x = _ar1(np.random.default_rng(5), 0.7, 500)
        curve = autocorrelation_curve(x, 10)
        assert curve[0] == pytest.approx(1.0)
        for lag in (1, 4, 10):
            assert curve[lag] == pytest.approx(autocorrelation(x, lag), abs=1e-10)

    def test_constant_sequence(self):
        with pytest.raises(DiagnosticsError):
            autocorrelation(np.ones(10), 1)


class TestEffectiveSampleSize:
    """n_eff con truncamiento por pares"""

    def test_independent_draws(self):
        chains = np.random.default_rng(1).normal(size=(4, 1000))
        assert effective_sample_size(chains) == pytest.approx(4000, rel=0.15)

    def test_ar1_chains(self):
        rng = np.random.default_rng(2)
        chains = np.vstack([_ar1(rng, 0.5, 5000) for _ in range(4)])
        assert effective_sample_size(chains) == pytest.approx(4 * 5000 / 3, rel=0.15)

    def test_bounded_by_sample_count(self):
        chains = np.tile([1.0, -1.0], (2, 50))
        assert effective_sample_size(chains) <= 200


class TestCredibleInterval:
    def test_hazen_percentiles(self):
        low, high = credible_interval(np.arange(1, 101), 0.66)
        assert (low, high) == pytest.approx((17.5, 83.5))

    def test_full_mass_is_range(self):
        assert credible_interval([3.0, -1.0, 7.0], 1.0) == (-1.0, 7.0)

    def test_empty_rejected(self):
        with pytest.raises(InsufficientSamplesError):
            credible_interval([])


class TestSummarize:
    """Diagnósticos sobre un SampleStore"""

    def _store(self, rng, stages=(0, 1, 2)):
        store = SampleStore(2, ["a", "b"], burn_in=10)
        for chain in range(2):
            for i in range(210):
                store.append(chain, SampleRow(iteration=i, theta=rng.normal(size=2),
                                              log_posterior=0.0, stage=stages[i % len(stages)]))
        return store

    def test_converged_store(self):
        diag = summarize(self._store(np.random.default_rng(9)), threshold=1.1)
        assert diag.converged
        assert diag.post_burn_in_length == 200
        assert set(diag.autocorrelation) == {"a", "b"}
        assert np.all(diag.ess > 0)

    def test_acceptance_counts_skip_initial_row(self):
        stats = acceptance_statistics(self._store(np.random.default_rng(0)))
        assert stats[0]["steps"] == 209
        assert stats[0]["accepted_first_stage"] == 70
        assert stats[0]["accepted_second_stage"] == 70

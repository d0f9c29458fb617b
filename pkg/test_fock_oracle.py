"""
Tests for the truncated Fock-space reference computations
"""

import numpy as np
import pytest

from gaussmac.core.exceptions import ConfigError, ShapeError, UnphysicalError
from gaussmac.services.bgmac import PointToPointBgc
from gaussmac.services.capacities import EnergyBudget, ea_total_rate_capacity
from gaussmac.services.fock_oracle import (
    FockState,
    beamsplitter_unitary,
    density_entropy,
    fock_mean_photon,
    fock_mutual_information,
    fock_thermal_loss_apply,
    fock_thermal_loss_rate,
    fock_tmsv,
    reduced_density,
    thermal_populations,
)
from gaussmac.services.gaussian_core import g_function


def test_tmsv_marginals_are_thermal():
    state = fock_tmsv(0.5, 25)
    assert state.trace == pytest.approx(1.0)
    assert fock_mean_photon(state, 0) == pytest.approx(0.5, abs=1e-9)
    assert density_entropy(reduced_density(state, [1])) == pytest.approx(g_function(0.5), abs=1e-8)


def test_tmsv_mutual_information_is_twice_marginal_entropy():
    state = fock_tmsv(0.3, 25)
    assert fock_mutual_information(state, ([0], [1])) == pytest.approx(2 * g_function(0.3), abs=1e-8)


def test_product_state_has_no_mutual_information():
    psi = np.kron([0.6, 0.8], [1.0, 0.0, 0.0])
    state = FockState.from_array((2, 3), psi)
    assert fock_mutual_information(state, ([0], [1])) == pytest.approx(0.0, abs=1e-12)


def test_thermal_populations_sum_to_one():
    p, tail = thermal_populations(0.4, 40)
    assert p.sum() + tail == pytest.approx(1.0, abs=1e-12)
    assert p[1] / p[0] == pytest.approx(0.4 / 1.4)


def test_beamsplitter_is_unitary_on_closed_blocks():
    U = beamsplitter_unitary(0.6, 4, 4).full()
    # one-photon block |1,0>, |0,1> is never truncated
    block = U[np.ix_([4, 1], [4, 1])]
    assert block.T @ block == pytest.approx(np.eye(2), abs=1e-12)
    assert abs(block[0, 0]) == pytest.approx(np.sqrt(0.6))


def test_loss_reduces_photon_number():
    state = fock_thermal_loss_apply(fock_tmsv(0.5, 20), 0, 0.6, 0.5, 30)
    assert state.is_density
    assert fock_mean_photon(state, 0) == pytest.approx(0.6 * 0.5 + 0.4 * 0.5, abs=1e-7)
    assert fock_mean_photon(state, 1) == pytest.approx(0.5, abs=1e-7)


def test_oracle_agrees_with_gaussian_pipeline():
    fock = fock_thermal_loss_rate(0.6, 0.2, 0.5, dims=(25, 25, 30))
    gaussian = ea_total_rate_capacity(PointToPointBgc(0, 0.6, 0.2).as_bgmac(), EnergyBudget((0.5,)))
    assert abs(fock - gaussian) <= 1e-3


def test_pure_loss_oracle():
    fock = fock_thermal_loss_rate(0.8, 0.0, 0.2, dims=(20, 20, 20))
    gaussian = ea_total_rate_capacity(PointToPointBgc(0, 0.8, 0.0).as_bgmac(), EnergyBudget((0.2,)))
    assert fock == pytest.approx(gaussian, abs=1e-6)


def test_truncation_errors():
    with pytest.raises(ConfigError):
        fock_thermal_loss_rate(0.6, 0.2, 5.0, dims=(10, 10, 30))
    with pytest.raises(ConfigError):
        fock_thermal_loss_apply(fock_tmsv(0.1, 10), 0, 0.5, 3.0, 5)
    with pytest.raises(ShapeError):
        fock_thermal_loss_rate(0.6, 0.2, 0.5, dims=(25, 20, 30))
    with pytest.raises(UnphysicalError):
        fock_thermal_loss_apply(fock_tmsv(0.1, 10), 0, 1.5, 0.0, 5)
    with pytest.raises(ShapeError):
        FockState.from_array((2, 2), np.ones(3))


def test_output_truncation_is_a_config_error():
    # environment fits its truncation, but ~1 photon per use overflows an 8-level signal mode
    with pytest.raises(ConfigError):
        fock_thermal_loss_rate(0.5, 1.0, 0.01, dims=(8, 8, 80))


def test_successive_pure_losses_compose():
    state = fock_thermal_loss_apply(fock_tmsv(0.4, 20), 0, 0.8, 0.0, 20)
    state = fock_thermal_loss_apply(state, 0, 0.5, 0.0, 20)
    assert state.trace == pytest.approx(1.0, abs=1e-8)
    assert fock_mean_photon(state, 0) == pytest.approx(0.4 * 0.4, abs=1e-8)
    assert fock_mean_photon(state, 1) == pytest.approx(0.4, abs=1e-8)


@pytest.mark.parametrize(
    "tau, N_B, N_S",
    [
        (0.6, 0.2, 0.5),
        (0.9, 0.02, 1.0),
        (0.3, 0.1, 0.8),
        (0.5, 0.0, 1.0),
        (0.8, 0.05, 0.2),
        (0.2, 0.3, 0.6),
        (0.95, 0.01, 0.9),
        (0.4, 0.2, 0.3),
        (0.7, 0.1, 1.0),
        (0.1, 0.45, 0.7),
    ],
)
def test_oracle_agrees_across_settings(tau, N_B, N_S):
    # N_S <= 1 and N_env <= 0.5 keep every truncation tail below the threshold at these dims
    fock = fock_thermal_loss_rate(tau, N_B, N_S, dims=(30, 30, 40))
    gaussian = ea_total_rate_capacity(PointToPointBgc(0, tau, N_B).as_bgmac(), EnergyBudget((N_S,)))
    assert abs(fock - gaussian) <= 1e-3

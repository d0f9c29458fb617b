"""
Tests for the covariance-matrix calculus: entropies, states and symplectic transforms
"""

import numpy as np
import pytest
from scipy.linalg import expm

from gaussmac.core.exceptions import ShapeError, UnphysicalError
from gaussmac.services.gaussian_core import (
    CovarianceMatrix,
    ModeLayout,
    SymplecticTransform,
    apply_transform,
    beamsplitter_array,
    direct_sum,
    entropy_of,
    g_function,
    local_transform,
    mean_photon,
    phase_rotation,
    purify_single_mode,
    squeezer,
    subsystem_cm,
    symplectic_eigenvalues,
    symplectic_form,
    thermal_cm,
    tmsv_cm,
    vacuum_cm,
    von_neumann_entropy,
)
from gaussmac.services.capacities import EnergyBudget
from gaussmac.services.region import GaussianEncoding, gaussian_input_cm, r_star


def test_g_function_values():
    """g(x) known values and the x -> 0 limit"""
    assert g_function(0.0) == 0.0
    assert g_function(1e-18) == 0.0
    assert g_function(0.1) == pytest.approx(0.48344, abs=1e-5)
    assert g_function(0.5) == pytest.approx(1.37744, abs=1e-5)
    assert g_function(1.0) == pytest.approx(2.0, abs=1e-12)


def test_g_function_rejects_negative():
    with pytest.raises(UnphysicalError):
        g_function(-0.01)


def test_thermal_entropy_matches_g():
    for N in (0.0, 0.3, 2.0):
        assert von_neumann_entropy(thermal_cm(N)) == pytest.approx(g_function(N), abs=1e-10)
        assert symplectic_eigenvalues(thermal_cm(N, m=2)) == pytest.approx([2 * N + 1] * 2)


def test_tmsv_is_pure_with_thermal_marginals():
    N = 0.7
    V = tmsv_cm(N)
    assert von_neumann_entropy(V) == pytest.approx(0.0, abs=1e-8)
    assert entropy_of(V, [0]) == pytest.approx(g_function(N), abs=1e-10)
    assert entropy_of(V, [1]) == pytest.approx(g_function(N), abs=1e-10)
    assert mean_photon(V, 0) == pytest.approx(N)


def test_entropy_of_empty_subsystem_is_zero():
    assert entropy_of(tmsv_cm(1.0), []) == 0.0


def test_squeezed_vacuum_is_pure():
    r = 0.8
    V = apply_transform(squeezer(r, 0.3), vacuum_cm())
    assert von_neumann_entropy(V) == pytest.approx(0.0, abs=1e-8)
    assert mean_photon(V, 0) == pytest.approx(np.sinh(r) ** 2, rel=1e-12)


def test_transforms_are_symplectic():
    assert squeezer(0.4, 1.1).is_symplectic()
    assert phase_rotation(0.7).is_symplectic()
    bs = beamsplitter_array(np.array([0.6, 0.8]))
    assert bs.is_symplectic()
    composed = bs.compose(local_transform(squeezer(0.2, 0.0).matrix, [1], 2))
    assert composed.is_symplectic()


def test_beamsplitter_first_output_is_weighted_sum():
    weights = np.array([0.6, 0.0, 0.8])
    T = beamsplitter_array(weights).matrix
    assert T[0, 0::2] == pytest.approx(weights)


def test_beamsplitter_rejects_unnormalised_weights():
    with pytest.raises(ShapeError):
        beamsplitter_array([0.5, 0.5])


def test_purification_is_pure_and_reproduces_input():
    V = CovarianceMatrix(np.array([[3.0, 0.4], [0.4, 2.0]]))
    P = purify_single_mode(V)
    assert subsystem_cm(P, [0]).matrix == pytest.approx(V.matrix)
    assert von_neumann_entropy(P) == pytest.approx(0.0, abs=1e-8)


def test_direct_sum_and_subsystems():
    V = direct_sum(thermal_cm(0.2), tmsv_cm(0.5))
    assert V.m == 3
    assert subsystem_cm(V, [1, 2]).matrix == pytest.approx(tmsv_cm(0.5).matrix)
    assert entropy_of(V, [0, 1, 2]) == pytest.approx(g_function(0.2), abs=1e-8)


def test_invalid_covariance_matrices():
    with pytest.raises(ShapeError):
        CovarianceMatrix(np.eye(3))
    with pytest.raises(UnphysicalError):
        CovarianceMatrix(np.array([[1.0, 0.5], [0.0, 1.0]]))
    with pytest.raises(UnphysicalError):
        symplectic_eigenvalues(CovarianceMatrix(0.5 * np.eye(2)))


def test_transform_shape_mismatch():
    with pytest.raises(ShapeError):
        apply_transform(SymplecticTransform(np.eye(4)), vacuum_cm(1))


def test_mode_layouts():
    assert ModeLayout.standard(2).labels == ("A1", "A'1", "A2", "A'2")
    assert ModeLayout.output(2).labels == ("B", "A'1", "A'2")
    assert ModeLayout.standard(2).position("A2") == 2
    with pytest.raises(ShapeError):
        ModeLayout(("A1", "A1"))
    with pytest.raises(ShapeError):
        ModeLayout.standard(1).position("B")


# ============= Randomised Invariants =============

def _random_symplectic(m, rng, scale=0.4):
    H = rng.normal(size=(2 * m, 2 * m)) * scale
    return SymplecticTransform(expm(symplectic_form(m) @ (H + H.T) / 2))


def _random_mixed_state(m, rng):
    thermal = direct_sum(*(thermal_cm(N) for N in rng.uniform(0.05, 3.0, m)))
    return apply_transform(_random_symplectic(m, rng), thermal)


def test_entropy_is_invariant_under_symplectics():
    rng = np.random.default_rng(11)
    for _ in range(100):
        m = int(rng.integers(1, 5))
        V = _random_mixed_state(m, rng)
        S = _random_symplectic(m, rng)
        assert S.is_symplectic(1e-9)
        assert von_neumann_entropy(apply_transform(S, V)) == pytest.approx(von_neumann_entropy(V), abs=1e-9)


def test_entropy_is_additive_over_direct_sums():
    rng = np.random.default_rng(12)
    for _ in range(50):
        V1 = _random_mixed_state(int(rng.integers(1, 4)), rng)
        V2 = _random_mixed_state(int(rng.integers(1, 4)), rng)
        joint = direct_sum(V1, V2)
        expected = von_neumann_entropy(V1) + von_neumann_entropy(V2)
        assert entropy_of(joint, range(joint.m)) == pytest.approx(expected, abs=1e-9)


@pytest.mark.parametrize("N_S", [0.0, 1e-6, 0.3, 1.0, 7.5, 42.0, 100.0])
def test_tmsv_stays_pure_up_to_large_brightness(N_S):
    assert von_neumann_entropy(tmsv_cm(N_S)) <= 1e-9
    assert symplectic_eigenvalues(tmsv_cm(N_S)) == pytest.approx([1.0, 1.0], abs=1e-9)


def test_squeezed_inputs_spend_exactly_the_budget():
    rng = np.random.default_rng(13)
    for _ in range(200):
        s = int(rng.integers(1, 5))
        N = rng.uniform(0.0, 5.0, s)
        r = tuple(rng.uniform(-1.0, 1.0) * r_star(n) for n in N)
        theta = tuple(rng.uniform(0, 2 * np.pi, s))
        V = gaussian_input_cm(GaussianEncoding(r, theta), EnergyBudget(tuple(N)))
        photons = [mean_photon(V, 2 * k) for k in range(s)]
        assert photons == pytest.approx(list(N), abs=1e-10)

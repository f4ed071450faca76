import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dicke_quench.entanglement import entropy_of_state
from dicke_quench.errors import CutoffTooSmallError, InvalidParamsError
from dicke_quench.model import (
    ModelParams,
    atomic_inversion_diagonal,
    build_parity_diagonal,
    energy_expectation,
    number_operator_diagonal,
)
from dicke_quench.spectral import ground_energy
from dicke_quench.states import (
    coherent_ground_state,
    coherent_product,
    minimal_photon_cutoff,
    superpose,
    superposition_entropy,
    variational_params,
)


def test_variational_normal_phase_is_zero():
    p = ModelParams(10, 1.0, 1.0, 0.5, 40)  # exactly lambda_c
    cp = variational_params(p)
    assert cp.mu == 0.0 and cp.nu == 0.0


def test_variational_reference_values():
    p = ModelParams(30, 1.0, 1.0, 1.0, 80)
    cp = variational_params(p)
    assert cp.mu == pytest.approx(math.sqrt(0.6), abs=1e-12)
    assert cp.nu == pytest.approx(-math.sqrt(30.0) * math.sqrt(1 - 0.0625), abs=1e-5)
    assert cp.nu == pytest.approx(-5.30330, abs=1e-5)
    minus = variational_params(p, branch=-1)
    assert minus.mu == -cp.mu and minus.nu == -cp.nu


def test_variational_strong_coupling_asymptotics():
    p = ModelParams(12, 1.0, 1.0, 250.0, 8)
    cp = variational_params(p)
    assert cp.mu == pytest.approx(1.0, abs=1e-4)
    # |nu| / sqrt(2J) approaches lambda/omega
    assert abs(cp.nu) / math.sqrt(12.0) == pytest.approx(250.0, rel=1e-4)


def test_zero_displacement_product_is_basis_state():
    p = ModelParams(3, 1.0, 1.0, 0.1, 6)
    st_ = coherent_product(p, variational_params(p))  # normal phase -> mu=nu=0
    expect = np.zeros(p.dimension)
    expect[0] = 1.0  # |j,-j> x |0> is the first atom-major basis state
    np.testing.assert_allclose(st_.amplitudes, expect, atol=1e-15)


@pytest.mark.parametrize("n_atoms,coupling", [(10, 1.2), (21, 0.9), (30, 2.0)])
def test_coherent_moments(n_atoms, coupling):
    p = ModelParams(n_atoms, 1.0, 1.0, coupling, minimal_photon_cutoff(
        variational_params(ModelParams(n_atoms, 1.0, 1.0, coupling, 8)).nu))
    cp = variational_params(p)
    st_ = coherent_product(p, cp)
    amps = st_.amplitudes
    n_mean = float(np.real(np.vdot(amps, number_operator_diagonal(p) * amps)))
    jz_mean = float(np.real(np.vdot(amps, atomic_inversion_diagonal(p) * amps)))
    assert n_mean == pytest.approx(cp.nu**2, abs=1e-8)
    assert jz_mean == pytest.approx(p.j * (cp.mu**2 - 1) / (cp.mu**2 + 1), abs=1e-8)
    assert abs(np.linalg.norm(amps) - 1.0) < 1e-10


def test_product_state_is_rank_one():
    p = ModelParams(20, 1.0, 1.0, 1.5, 240)
    st_ = coherent_ground_state(p)
    svals = np.linalg.svd(st_.amplitude_matrix(), compute_uv=False)
    assert svals[1] < 1e-12


def test_cutoff_guard_raises():
    p = ModelParams(30, 1.0, 1.0, 2.5, 120)  # needs ~300 shells
    with pytest.raises(CutoffTooSmallError):
        coherent_ground_state(p)


def test_variational_energy_above_ground_and_tightens_with_n():
    gaps = []
    for n_atoms in (10, 20, 30):
        lam = 1.5
        probe = ModelParams(n_atoms, 1.0, 1.0, lam, 8)
        n_max = minimal_photon_cutoff(variational_params(probe).nu) + 20
        p = ModelParams(n_atoms, 1.0, 1.0, lam, n_max)
        st_ = coherent_ground_state(p)
        e_var = energy_expectation(p, st_.amplitudes)
        e0 = ground_energy(p)
        gap = (e_var - e0) / p.j
        assert gap >= -1e-10
        gaps.append(gap)
    assert gaps[0] > gaps[1] > gaps[2]


def test_parity_maps_branches_onto_each_other():
    p = ModelParams(14, 1.0, 1.0, 1.8, 160)
    plus = coherent_product(p, variational_params(p, 1))
    minus = coherent_product(p, variational_params(p, -1))
    flipped = build_parity_diagonal(p) * plus.amplitudes
    overlap = np.vdot(minus.amplitudes, flipped)
    assert abs(abs(overlap) - 1.0) < 1e-8


def test_superpose_identity_and_errors():
    p = ModelParams(6, 1.0, 1.0, 1.2, 60)
    s1 = coherent_product(p, variational_params(p, 1))
    s2 = coherent_product(p, variational_params(p, -1))
    same = superpose(s1, s2, 1.0, 0.0)
    np.testing.assert_allclose(same.amplitudes, s1.amplitudes, atol=1e-14)
    with pytest.raises(InvalidParamsError):
        superpose(s1, s2, 0.0, 0.0)
    other = coherent_product(p.with_n_max(61), variational_params(p, -1))
    with pytest.raises(InvalidParamsError):
        superpose(s1, other, 1.0, 1.0)


def test_parity_superposition_entropy_matches_formula():
    # branch products are orthogonal to exponential accuracy at this size, so
    # the closed-form initial entanglement entropy applies
    p = ModelParams(20, 1.0, 1.0, 2.0, 300)
    for alpha, beta, expected in [
        (1 / math.sqrt(2), 1 / math.sqrt(2), math.log(2)),
        (1 / math.sqrt(2), -1 / math.sqrt(2), math.log(2)),
        (0.9, 0.3, superposition_entropy(0.9, 0.3)),
        (1.0, 0.0, 0.0),
    ]:
        st_ = coherent_ground_state(p, alpha, beta)
        assert entropy_of_state(st_) == pytest.approx(expected, abs=1e-6)


@settings(max_examples=60, deadline=None)
@given(
    st.floats(0.05, 5.0),
    st.floats(0.0, 5.0),
    st.floats(0.1, 20.0),
)
def test_superposition_entropy_properties(a, b, scale):
    s = superposition_entropy(a, b)
    assert -1e-12 <= s <= math.log(2) + 1e-12
    assert superposition_entropy(b, a) == pytest.approx(s, abs=1e-12)
    assert superposition_entropy(scale * a, scale * b) == pytest.approx(s, abs=1e-9)

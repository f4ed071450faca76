import numpy as np
import pytest
import scipy.linalg

from dicke_quench.errors import CapacityError, InvalidParamsError
from dicke_quench.model import (
    ModelParams,
    apply_hamiltonian,
    atomic_inversion_diagonal,
    build_hamiltonian,
    build_hamiltonian_block,
    build_parity_diagonal,
    flat_index,
    number_operator_diagonal,
    parity_block_indices,
)

from conftest import random_state


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(n_atoms=0, omega=1.0, omega0=1.0, coupling=1.0, n_max=5),
        dict(n_atoms=2, omega=0.0, omega0=1.0, coupling=1.0, n_max=5),
        dict(n_atoms=2, omega=1.0, omega0=-1.0, coupling=1.0, n_max=5),
        dict(n_atoms=2, omega=1.0, omega0=1.0, coupling=-0.5, n_max=5),
        dict(n_atoms=2, omega=1.0, omega0=1.0, coupling=1.0, n_max=-1),
        dict(n_atoms=2.5, omega=1.0, omega0=1.0, coupling=1.0, n_max=5),
    ],
)
def test_invalid_params_rejected(kwargs):
    with pytest.raises(InvalidParamsError):
        ModelParams(**kwargs)


def test_capacity_guard():
    with pytest.raises(CapacityError):
        ModelParams(100, 1.0, 1.0, 1.0, 10_000)


def test_derived_accessors():
    p = ModelParams(30, 1.0, 4.0, 1.3, 100)
    assert p.j == 15.0
    assert p.dimension == 31 * 101
    assert p.lambda_c() == pytest.approx(1.0)  # sqrt(1*4)/2
    assert p.with_coupling(0.0).coupling == 0.0
    assert p.with_n_max(7).n_max == 7


def test_flat_index_bijection():
    p = ModelParams(3, 1.0, 1.0, 0.5, 4)
    seen = set()
    for mi in range(p.n_atoms + 1):
        for n in range(p.n_max + 1):
            seen.add(flat_index(p, mi, n))
    assert seen == set(range(p.dimension))
    with pytest.raises(InvalidParamsError):
        flat_index(p, 4, 0)


def test_single_atom_no_photon_room():
    # with n_max=0 the coupling cannot act: H is the bare atomic doublet
    p = ModelParams(1, 1.0, 1.0, 37.2, 0)
    h = build_hamiltonian(p)
    assert np.array_equal(h, np.diag([-0.5, 0.5]))


def test_decoupled_hamiltonian_is_diagonal():
    p = ModelParams(2, 1.0, 1.0, 0.0, 1)
    h = build_hamiltonian(p)
    m = atomic_inversion_diagonal(p)
    n = number_operator_diagonal(p)
    assert np.array_equal(h, np.diag(m + n))
    assert sorted(np.diag(h)) == [-1.0, 0.0, 0.0, 1.0, 1.0, 2.0]


def test_hamiltonian_bitwise_symmetric():
    p = ModelParams(5, 1.0, 1.3, 0.8, 11)
    h = build_hamiltonian(p)
    assert np.array_equal(h, h.T)


def test_parity_examples_and_block_zeros():
    p = ModelParams(2, 1.0, 1.0, 0.7, 6)
    par = build_parity_diagonal(p)
    # N=2 (j=1): m=-1 -> m_index 0; exponent j+m+n = m_index+n
    assert par[flat_index(p, 0, 0)] == 1
    assert par[flat_index(p, 1, 0)] == -1
    h = build_hamiltonian(p)
    off_parity = np.not_equal.outer(par, par)
    assert np.all(h[off_parity] == 0.0)


def test_ground_energy_against_imaginary_time_oracle():
    # independent route: repeated exp(-tau H) applications (scaling-and-squaring
    # matrix exponential) converge to the ground state; Rayleigh quotient gives E0
    p = ModelParams(2, 1.0, 1.0, 0.3, 8)
    h = build_hamiltonian(p)
    propagator = scipy.linalg.expm(-0.5 * h)
    rng = np.random.default_rng(5)
    v = rng.standard_normal(p.dimension)
    for _ in range(400):
        v = propagator @ v
        v /= np.linalg.norm(v)
    e0_oracle = float(v @ h @ v)
    e0 = float(np.min(np.linalg.eigvalsh(h)))
    assert abs(e0 - e0_oracle) < 1e-10


def test_number_diagonal_and_sum():
    p = ModelParams(4, 1.0, 1.0, 0.9, 17)
    nd = number_operator_diagonal(p)
    assert nd[flat_index(p, 2, 0)] == 0.0
    assert nd[flat_index(p, 3, 5)] == 5.0
    brute = sum(n for _ in range(p.n_atoms + 1) for n in range(p.n_max + 1))
    assert nd.sum() == brute == (p.n_atoms + 1) * p.n_max * (p.n_max + 1) / 2


def test_off_diagonal_scales_linearly_in_coupling():
    p1 = ModelParams(3, 1.0, 1.0, 0.4, 9)
    p2 = p1.with_coupling(1.1)
    h1 = build_hamiltonian(p1)
    h2 = build_hamiltonian(p2)
    off1 = h1 - np.diag(np.diag(h1))
    off2 = h2 - np.diag(np.diag(h2))
    np.testing.assert_allclose(off2 - off1, (1.1 - 0.4) / 0.4 * off1, atol=1e-14)


@pytest.mark.parametrize("n_atoms,n_max", [(2, 7), (3, 8), (6, 5)])
def test_parity_blocks_match_dense_slices(n_atoms, n_max):
    p = ModelParams(n_atoms, 1.0, 0.7, 0.9, n_max)
    h = build_hamiltonian(p)
    idx_even, idx_odd = parity_block_indices(p)
    assert len(idx_even) + len(idx_odd) == p.dimension
    for parity, idx in ((1, idx_even), (-1, idx_odd)):
        np.testing.assert_array_equal(build_hamiltonian_block(p, parity), h[np.ix_(idx, idx)])


def test_apply_hamiltonian_matches_dense(rng):
    p = ModelParams(5, 1.0, 1.2, 0.6, 10)
    h = build_hamiltonian(p)
    for complex_amplitudes in (False, True):
        st = random_state(p, rng, complex_amplitudes)
        np.testing.assert_allclose(apply_hamiltonian(p, st.amplitudes), h @ st.amplitudes, atol=1e-12)

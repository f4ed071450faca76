import os

import numpy as np
import pytest

from dicke_quench.errors import InvalidParamsError
from dicke_quench.model import ModelParams, build_hamiltonian, build_parity_diagonal
from dicke_quench.spectral import (
    cache_key,
    cache_lookup,
    cache_path,
    cache_store,
    certify_cutoff,
    default_photon_cutoff,
    diagonalize,
    diagonalize_window,
    ground_energy,
    shell_tail_weight,
    spectrum_only,
)


def test_decoupled_spectrum_exact():
    spec = diagonalize(ModelParams(2, 1.0, 1.0, 0.0, 1))
    np.testing.assert_array_equal(spec.eigenvalues, [-1.0, 0.0, 0.0, 1.0, 1.0, 2.0])


def test_trace_identity(small_params):
    spec = spectrum_only(small_params)
    h_trace = np.trace(build_hamiltonian(small_params))
    assert abs(spec.eigenvalues.sum() - h_trace) < 1e-8 * max(abs(h_trace), 1.0)


def test_orthonormality_parity_and_residual(small_params):
    spec = diagonalize(small_params)
    v = spec.eigenvectors
    dim = small_params.dimension
    assert np.max(np.abs(v.T @ v - np.eye(dim))) < 1e-10
    h = build_hamiltonian(small_params)
    resid = h @ v - v * spec.eigenvalues[None, :]
    assert np.max(np.abs(resid)) < 1e-8 * np.max(np.abs(spec.eigenvalues))
    # each eigenvector supported on a single parity sector
    par = build_parity_diagonal(small_params)
    for k in range(dim):
        col = v[:, k]
        assert np.all(col[par != spec.parities[k]] == 0.0)


def test_eigenvalues_sorted_with_parity_tiebreak():
    # lambda=0 spectrum has exact cross-parity degeneracies
    spec = diagonalize(ModelParams(2, 1.0, 1.0, 0.0, 3))
    assert np.all(np.diff(spec.eigenvalues) >= 0)
    for e in np.unique(spec.eigenvalues):
        pars = spec.parities[spec.eigenvalues == e]
        assert np.all(np.diff(pars) <= 0), "parity +1 must come first on ties"


def test_determinism_bitwise(small_params):
    a = diagonalize(small_params)
    b = diagonalize(small_params)
    assert np.array_equal(a.eigenvalues, b.eigenvalues)
    assert np.array_equal(a.eigenvectors, b.eigenvectors)


def test_window_matches_full(small_params):
    full = diagonalize(small_params)
    lo, hi = -3.0, 5.0
    win = diagonalize_window(small_params, (lo, hi))
    mask = (full.eigenvalues >= lo) & (full.eigenvalues <= hi)
    assert win.size == mask.sum()
    np.testing.assert_allclose(win.eigenvalues, full.eigenvalues[mask], atol=1e-12)
    with pytest.raises(InvalidParamsError):
        diagonalize_window(small_params, (2.0, 2.0))


def test_spectrum_only_matches_vector_solve(small_params):
    np.testing.assert_allclose(
        spectrum_only(small_params).eigenvalues, diagonalize(small_params).eigenvalues, atol=1e-10
    )
    assert ground_energy(small_params) == pytest.approx(diagonalize(small_params).eigenvalues[0])


def test_superradiant_doublet_gap():
    # below the critical energy the parity sectors are quasi-degenerate: the
    # lowest +/- pair at N=30, lambda=2.5 splits by far less than 1e-6 omega
    p = ModelParams(30, 1.0, 1.0, 2.5, 300)
    spec = spectrum_only(p)
    gap = spec.eigenvalues[1] - spec.eigenvalues[0]
    assert {int(spec.parities[0]), int(spec.parities[1])} == {1, -1}
    assert gap < 1e-6 * p.omega


def test_default_cutoff_heuristic():
    assert default_photon_cutoff(30, 0.1) == 64
    assert default_photon_cutoff(30, 2.5, 1.0) == int(np.ceil(8 * 15 * 6.25))


def test_certify_cutoff_trivial_cases():
    # vacuum probe at a generous cutoff: zero tail; lambda=0 conserves the
    # photon number so the ground energy cannot move with the cutoff
    p = ModelParams(2, 1.0, 1.0, 0.0, 50)
    probe = np.zeros(p.dimension)
    probe[0] = 1.0
    report = certify_cutoff(p, probe, tol=1e-10)
    assert report.tail_weight == 0.0
    assert report.ground_energy_shift == 0.0
    assert report.passed


def test_certify_cutoff_fails_when_tight():
    p = ModelParams(4, 1.0, 1.0, 1.5, 12)  # coherent ground state needs ~40 shells
    probe = np.zeros(p.dimension)
    probe[0] = 1.0
    report = certify_cutoff(p, probe, tol=1e-10)
    assert not report.passed


def test_ground_tail_decreases_with_cutoff():
    from dicke_quench.spectral import _ground_pair

    tails = []
    for n_max in (150, 200, 260):
        p = ModelParams(30, 1.0, 1.0, 2.5, n_max)
        _, gvec = _ground_pair(p, vectors=True)
        tails.append(shell_tail_weight(p, gvec))
    assert tails[0] > tails[1] > tails[2]


def test_cache_round_trip(tmp_path, small_params):
    spec = diagonalize(small_params)
    path = cache_store(str(tmp_path), spec)
    assert os.path.exists(path)
    back = cache_lookup(str(tmp_path), small_params)
    assert back is not None
    assert np.array_equal(back.eigenvalues, spec.eigenvalues)
    assert np.array_equal(back.parities, spec.parities)
    assert np.array_equal(back.eigenvectors, spec.eigenvectors)


def test_cache_misses(tmp_path, small_params):
    assert cache_lookup(str(tmp_path), small_params) is None
    cache_store(str(tmp_path), diagonalize(small_params))
    assert cache_lookup(str(tmp_path), small_params.with_n_max(61)) is None


def test_cache_corruption_is_warned_miss(tmp_path, small_params):
    spec = diagonalize(small_params)
    path = cache_store(str(tmp_path), spec)
    raw = bytearray(open(path, "rb").read())
    raw[100] ^= 0xFF
    open(path, "wb").write(bytes(raw))
    with pytest.warns(UserWarning, match="corrupt"):
        assert cache_lookup(str(tmp_path), small_params) is None
    # truncated file
    open(path, "wb").write(bytes(raw[:40]))
    with pytest.warns(UserWarning):
        assert cache_lookup(str(tmp_path), small_params) is None


def test_cache_key_canonical():
    a = ModelParams(4, 1.0, 1.0, 1.25, 60)
    b = ModelParams(n_max=60, coupling=1.25, omega0=1.0, omega=1.0, n_atoms=4)
    assert cache_key(a) == cache_key(b)
    assert cache_path("/x", a).endswith(".dickspec")
    assert cache_key(a) != cache_key(a.with_coupling(1.2500001))

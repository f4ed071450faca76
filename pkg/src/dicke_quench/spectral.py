"""Dense parity-resolved eigendecomposition, cutoff certification, and spectra cache.

The two parity sectors of the Dicke Hamiltonian are solved independently
with LAPACK's dense symmetric drivers and merged afterwards.  Solving per
sector halves the cost, guarantees definite-parity eigenvectors, and keeps
quasi-degenerate parity doublets below the critical energy from mixing
numerically.

Memory notes (the large-cutoff runs care):

* blocks are built directly in Fortran order and handed to LAPACK with
  ``overwrite_a=True``, so a full solve peaks near two block-sized arrays;
* :func:`iter_block_eigens` streams one solved block at a time so callers
  can consume eigenvector artifacts and release them before the next block
  is factorized;
* an optional energy window (``subset_by_value``) restricts the eigenvector
  back-transform to the states a given analysis needs.
"""

from __future__ import annotations

import math
import os
import struct
import tempfile
import warnings
import zlib
from dataclasses import dataclass, field
from hashlib import sha256
from typing import Iterator, Sequence

import numpy as np
import scipy.linalg

from .errors import CacheCorruptionError, InvalidParamsError, NumericalFailureError
from .model import (
    ModelParams,
    apply_hamiltonian,
    build_hamiltonian_block,
    number_operator_diagonal,
    parity_block_indices,
)

# Divide-and-conquer is fastest but needs ~3 block-sized work arrays; switch
# to the leaner MRRR driver above this block size.
_EVD_MAX_BLOCK = 4096

_RESIDUAL_RTOL = 1e-8
_ORTHONORMALITY_TOL = 1e-10
_VERIFY_COLUMNS = 32


def real_mat_vec(matrix_t: np.ndarray, vec: np.ndarray) -> np.ndarray:
    """matrix_t @ vec for a real matrix and a possibly complex vector.

    Splits complex vectors into two real BLAS products; a naive product
    would upcast the (potentially huge) matrix to complex128 first.
    """
    if np.iscomplexobj(vec):
        re = matrix_t @ np.ascontiguousarray(vec.real)
        if np.any(vec.imag):
            return re + 1j * (matrix_t @ np.ascontiguousarray(vec.imag))
        return re.astype(np.complex128)
    return matrix_t @ vec


def column_diag_expectations(vectors: np.ndarray, diagonal: np.ndarray, chunk: int = 512) -> np.ndarray:
    """sum_i diagonal[i] * vectors[i, k]**2 per column k, chunked for BLAS."""
    out = np.empty(vectors.shape[1])
    for start in range(0, vectors.shape[1], chunk):
        cols = slice(start, min(start + chunk, vectors.shape[1]))
        out[cols] = (vectors[:, cols] ** 2).T @ diagonal
    return out


@dataclass
class BlockEigen:
    """Eigen-decomposition of one parity sector.

    ``indices`` are the flat product-basis positions spanned by the sector;
    ``vectors`` (when present) holds one eigenvector per column on those
    positions.  ``window`` records the energy interval the eigenpairs were
    restricted to (None means the full sector spectrum).
    """

    parity: int
    indices: np.ndarray
    energies: np.ndarray
    vectors: np.ndarray | None
    window: tuple[float, float] | None = None

    @property
    def size(self) -> int:
        return len(self.energies)


def _solve_block(
    p: ModelParams,
    parity: int,
    *,
    vectors: bool = True,
    window: tuple[float, float] | None = None,
) -> BlockEigen:
    """Build and diagonalize one parity sector."""
    idx_even, idx_odd = parity_block_indices(p)
    indices = idx_even if parity == 1 else idx_odd
    nb = len(indices)
    if nb == 0:
        return BlockEigen(parity, indices, np.empty(0), np.empty((0, 0)) if vectors else None, window)
    h = build_hamiltonian_block(p, parity, order="F")
    kwargs = {"overwrite_a": True, "check_finite": False}
    if window is not None:
        kwargs["subset_by_value"] = window
        kwargs["driver"] = "evr"
    elif vectors:
        kwargs["driver"] = "evd" if nb <= _EVD_MAX_BLOCK else "evr"
    try:
        if vectors:
            w, z = scipy.linalg.eigh(h, **kwargs)
            z = np.asfortranarray(z)  # fixed layout keeps downstream BLAS bit-reproducible
        else:
            w = scipy.linalg.eigh(h, eigvals_only=True, **kwargs)
            z = None
    except (np.linalg.LinAlgError, scipy.linalg.LinAlgError) as exc:  # pragma: no cover
        raise NumericalFailureError(f"eigensolver failed for {p}", params=p) from exc
    del h
    return BlockEigen(parity, indices, w, z, window)


def _verify_block(p: ModelParams, blk: BlockEigen) -> None:
    """Spot-check orthonormality and eigen-residuals on sampled columns.

    The full checks are O(n^3); sampling keeps per-solve verification cheap
    while the test suite exercises complete checks at small sizes.  Residuals
    use the matrix-free product so no second dense matrix is materialized.
    """
    if blk.vectors is None or blk.size == 0:
        return
    rng = np.random.default_rng(0)
    cols = np.arange(blk.size) if blk.size <= _VERIFY_COLUMNS else rng.choice(blk.size, _VERIFY_COLUMNS, replace=False)
    sub = blk.vectors[:, cols]
    gram = sub.T @ sub
    if np.max(np.abs(gram - np.eye(len(cols)))) > _ORTHONORMALITY_TOL:
        raise NumericalFailureError("eigenvector orthonormality check failed", params=p)
    scale = max(np.max(np.abs(blk.energies)), 1.0)
    full = np.zeros(p.dimension)
    for c in cols[: max(4, _VERIFY_COLUMNS // 4)]:
        full[:] = 0.0
        full[blk.indices] = blk.vectors[:, c]
        resid = apply_hamiltonian(p, full)[blk.indices] - blk.energies[c] * blk.vectors[:, c]
        if np.max(np.abs(resid)) > _RESIDUAL_RTOL * scale:
            raise NumericalFailureError("eigenpair residual check failed", params=p)


def iter_block_eigens(
    p: ModelParams,
    *,
    vectors: bool = True,
    window: tuple[float, float] | None = None,
    verify: bool = True,
) -> Iterator[BlockEigen]:
    """Yield the solved parity sectors one at a time (+1 first).

    Consumers that only need per-state projections can process each block
    and drop its eigenvector array before the next sector is factorized,
    which bounds peak memory at roughly two block-sized matrices.
    """
    for parity in (1, -1):
        blk = _solve_block(p, parity, vectors=vectors, window=window)
        if verify and vectors:
            _verify_block(p, blk)
        yield blk


def _merge_blocks(blocks: Sequence[BlockEigen]) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Merge per-sector spectra: ascending energy, parity +1 first on ties."""
    energies = np.concatenate([b.energies for b in blocks])
    parities = np.concatenate([np.full(b.size, b.parity, dtype=np.int8) for b in blocks])
    block_of = np.concatenate([np.full(b.size, i, dtype=np.int32) for i, b in enumerate(blocks)])
    col_of = np.concatenate([np.arange(b.size, dtype=np.int64) for b in blocks])
    order = np.lexsort((col_of, np.where(parities == 1, 0, 1), energies))
    return energies[order], parities[order], block_of[order], col_of[order]


@dataclass
class SpectralData:
    """Spectrum (and optionally eigenbasis) of a truncated Dicke Hamiltonian.

    Eigenvalues are ascending with ties broken by parity (+1 first).  Each
    eigenvector has definite parity by construction; its support lies in one
    parity sector of the product basis.  When built through
    :func:`diagonalize_window`, only eigenpairs inside ``window`` are held.
    """

    params: ModelParams
    eigenvalues: np.ndarray
    parities: np.ndarray
    blocks: list[BlockEigen] = field(repr=False)
    block_of: np.ndarray = field(repr=False)
    col_of: np.ndarray = field(repr=False)
    window: tuple[float, float] | None = None

    @property
    def size(self) -> int:
        """Number of eigenpairs held (D for a full decomposition)."""
        return len(self.eigenvalues)

    @property
    def has_vectors(self) -> bool:
        return all(b.vectors is not None for b in self.blocks)

    def _require_vectors(self):
        if not self.has_vectors:
            raise InvalidParamsError("this SpectralData was computed without eigenvectors")

    def ground_energy(self) -> float:
        return float(self.eigenvalues[0])

    def overlaps(self, vec: np.ndarray) -> np.ndarray:
        """<E_n|vec> for every held eigenstate, in merged (energy) order."""
        self._require_vectors()
        out = np.empty(self.size, dtype=np.complex128 if np.iscomplexobj(vec) else vec.dtype)
        for b, blk in enumerate(self.blocks):
            sel = self.block_of == b
            coeff = real_mat_vec(blk.vectors.T, vec[blk.indices])
            out[sel] = coeff[self.col_of[sel]]
        return out

    def diagonal_expectations(self, diagonal: np.ndarray) -> np.ndarray:
        """<E_n| diag |E_n> for a diagonal operator given on the product basis."""
        self._require_vectors()
        out = np.empty(self.size)
        for b, blk in enumerate(self.blocks):
            sel = self.block_of == b
            vals = column_diag_expectations(blk.vectors, diagonal[blk.indices])
            out[sel] = vals[self.col_of[sel]]
        return out

    def number_expectations(self) -> np.ndarray:
        """Photon-number expectation <E_n| a'a |E_n> per eigenstate."""
        return self.diagonal_expectations(number_operator_diagonal(self.params))

    def eigenvector(self, k: int) -> np.ndarray:
        """Full product-basis vector of the k-th (energy-ordered) eigenstate."""
        self._require_vectors()
        blk = self.blocks[self.block_of[k]]
        full = np.zeros(self.params.dimension)
        full[blk.indices] = blk.vectors[:, self.col_of[k]]
        return full

    @property
    def eigenvectors(self) -> np.ndarray:
        """Materialized (D, size) eigenvector matrix in merged column order.

        This allocates D*size floats; intended for small and medium systems.
        """
        self._require_vectors()
        out = np.zeros((self.params.dimension, self.size))
        for b, blk in enumerate(self.blocks):
            sel = np.flatnonzero(self.block_of == b)
            out[np.ix_(blk.indices, sel)] = blk.vectors[:, self.col_of[sel]]
        return out


def assemble_blocks(p: ModelParams, blocks: list[BlockEigen], window=None) -> SpectralData:
    energies, parities, block_of, col_of = _merge_blocks(blocks)
    return SpectralData(p, energies, parities, blocks, block_of, col_of, window)


def diagonalize(p: ModelParams, *, verify: bool = True) -> SpectralData:
    """Full spectrum and definite-parity eigenbasis of H(p).

    The two parity sectors are solved independently, then merged into
    ascending energy order (ties: parity +1 first, then sector-internal
    order, which makes cached artifacts deterministic).
    """
    return assemble_blocks(p, list(iter_block_eigens(p, vectors=True, verify=verify)))


def spectrum_only(p: ModelParams) -> SpectralData:
    """Eigenvalues and parities only (no eigenvectors)."""
    return assemble_blocks(p, list(iter_block_eigens(p, vectors=False)))


def diagonalize_window(p: ModelParams, window: tuple[float, float], *, verify: bool = True) -> SpectralData:
    """Eigenpairs restricted to an energy window (inclusive of bounds).

    Useful when an analysis only consumes states below some energy: the
    eigenvector back-transform is then proportional to the window size.
    """
    lo, hi = float(window[0]), float(window[1])
    if not lo < hi:
        raise InvalidParamsError(f"empty energy window {window}")
    return assemble_blocks(p, list(iter_block_eigens(p, vectors=True, window=(lo, hi), verify=verify)), (lo, hi))


def ground_energy(p: ModelParams) -> float:
    """Lowest eigenvalue of H(p) from eigenvalue-only sector solves."""
    best = math.inf
    for blk in iter_block_eigens(p, vectors=False):
        if blk.size:
            best = min(best, float(blk.energies[0]))
    return best


def default_photon_cutoff(n_atoms: int, lambda_max: float, omega: float = 1.0) -> int:
    """Default CLI cutoff heuristic: max(64, ceil(8 * j * lambda_max^2 / omega^2)).

    Scaled off the mean-field photon number ~ 2*j*lambda^2/omega^2 of the
    superradiant ground state with a factor-4 headroom for quenched states;
    always certify before trusting results at this cutoff.
    """
    j = n_atoms / 2.0
    return max(64, math.ceil(8.0 * j * lambda_max**2 / omega**2))


# ---------------------------------------------------------------------------
# cutoff certification
# ---------------------------------------------------------------------------


@dataclass
class ConvergenceReport:
    """Outcome of a truncation check at a given photon cutoff.

    ``tail_weight`` is the worst probability weight found in the top 5% of
    photon shells between the probe state and the ground state;
    ``ground_energy_shift`` is |E0(n_max) - E0(ceil(1.25*n_max))|.
    """

    n_max_used: int
    tail_weight: float
    ground_energy_shift: float
    tol: float
    passed: bool


def shell_tail_weight(p: ModelParams, amplitudes: np.ndarray, top_fraction: float = 0.05) -> float:
    """Probability weight of a state in the top ``top_fraction`` photon shells."""
    n_ph = p.n_max + 1
    n_from = n_ph - max(1, int(math.floor(top_fraction * n_ph)))
    psi = np.abs(np.asarray(amplitudes).reshape(p.n_atoms + 1, n_ph)) ** 2
    return float(psi[:, n_from:].sum())


def _ground_pair(p: ModelParams, vectors: bool) -> tuple[float, np.ndarray | None]:
    """Ground energy (and optionally full-basis ground vector) of H(p)."""
    best_e = math.inf
    best_vec = None
    for parity in (1, -1):
        idx_even, idx_odd = parity_block_indices(p)
        indices = idx_even if parity == 1 else idx_odd
        if len(indices) == 0:
            continue
        h = build_hamiltonian_block(p, parity, order="F")
        if vectors:
            w, z = scipy.linalg.eigh(h, subset_by_index=(0, 0), driver="evr",
                                     overwrite_a=True, check_finite=False)
        else:
            w = scipy.linalg.eigh(h, subset_by_index=(0, 0), driver="evr",
                                  eigvals_only=True, overwrite_a=True, check_finite=False)
            z = None
        del h
        if w[0] < best_e:
            best_e = float(w[0])
            if vectors:
                best_vec = np.zeros(p.dimension)
                best_vec[indices] = z[:, 0]
    return best_e, best_vec


def certify_cutoff(p: ModelParams, probe: np.ndarray, tol: float) -> ConvergenceReport:
    """Check that the photon cutoff holds both the probe and the ground state.

    Passes iff the top-shell weight of probe and ground state stays below
    ``tol`` and the ground energy moves by less than ``tol * omega`` when the
    cutoff grows to ceil(1.25 * n_max).
    """
    probe = np.asarray(probe)
    if abs(np.linalg.norm(probe) - 1.0) > 1e-8:
        raise InvalidParamsError("probe state must be normalized")
    e0, gvec = _ground_pair(p, vectors=True)
    tail = max(shell_tail_weight(p, probe), shell_tail_weight(p, gvec))
    bigger = p.with_n_max(math.ceil(1.25 * p.n_max))
    e0_big, _ = _ground_pair(bigger, vectors=False)
    shift = abs(e0 - e0_big)
    passed = (tail < tol) and (shift < tol * p.omega)
    return ConvergenceReport(p.n_max, tail, shift, tol, passed)


# ---------------------------------------------------------------------------
# on-disk spectra cache
# ---------------------------------------------------------------------------

_MAGIC = b"DICKSPEC"
_FORMAT_VERSION = 1


def cache_key(p: ModelParams) -> str:
    """Canonical content hash of a parameter set (field-order independent)."""
    text = ";".join(
        [
            f"N={p.n_atoms}",
            f"n_max={p.n_max}",
            f"omega={float(p.omega).hex()}",
            f"omega0={float(p.omega0).hex()}",
            f"lambda={float(p.coupling).hex()}",
        ]
    )
    return sha256(text.encode()).hexdigest()[:32]


def cache_path(cache_dir: str, p: ModelParams) -> str:
    return os.path.join(cache_dir, cache_key(p) + ".dickspec")


def _payload(p: ModelParams, spec: SpectralData) -> bytes:
    head = struct.pack(
        "<III d d d I",
        _FORMAT_VERSION,
        p.n_atoms,
        p.n_max,
        p.omega,
        p.omega0,
        p.coupling,
        p.dimension,
    )
    vals = spec.eigenvalues.astype("<f8").tobytes()
    pars = spec.parities.astype("i1").tobytes()
    vecs = np.asfortranarray(spec.eigenvectors).astype("<f8")
    return head + vals + pars + vecs.T.tobytes()  # .T of F-array is C-contiguous: column-major bytes


def cache_store(cache_dir: str, spec: SpectralData) -> str:
    """Write SpectralData under its canonical key; atomic via rename.

    File layout (little endian): magic "DICKSPEC", u32 format version, u32 N,
    u32 n_max, f64 omega, f64 omega0, f64 lambda, u32 D, D f64 eigenvalues,
    D i8 parities, D*D f64 eigenvectors column-major, u32 CRC32 of payload
    (everything between the magic and the checksum).
    """
    os.makedirs(cache_dir, exist_ok=True)
    payload = _payload(spec.params, spec)
    crc = zlib.crc32(payload) & 0xFFFFFFFF
    final = cache_path(cache_dir, spec.params)
    fd, tmp = tempfile.mkstemp(dir=cache_dir, suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(_MAGIC)
            fh.write(payload)
            fh.write(struct.pack("<I", crc))
        os.replace(tmp, final)
    finally:
        if os.path.exists(tmp):
            os.unlink(tmp)
    return final


def _read_cache_file(path: str, p: ModelParams) -> SpectralData:
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < len(_MAGIC) + 4 or raw[: len(_MAGIC)] != _MAGIC:
        raise CacheCorruptionError(f"bad magic in {path}")
    payload, (crc,) = raw[len(_MAGIC) : -4], struct.unpack("<I", raw[-4:])
    if zlib.crc32(payload) & 0xFFFFFFFF != crc:
        raise CacheCorruptionError(f"CRC mismatch in {path}")
    head_fmt = "<III d d d I"
    head_size = struct.calcsize(head_fmt)
    version, n_atoms, n_max, omega, omega0, lam, dim = struct.unpack(head_fmt, payload[:head_size])
    if version != _FORMAT_VERSION:
        raise CacheCorruptionError(f"unsupported format version {version} in {path}")
    stored = ModelParams(n_atoms, omega, omega0, lam, n_max)
    if stored != p or dim != p.dimension:
        raise CacheCorruptionError(f"parameter mismatch in {path}")
    body = payload[head_size:]
    expected = dim * 8 + dim + dim * dim * 8
    if len(body) != expected:
        raise CacheCorruptionError(f"truncated payload in {path}")
    vals = np.frombuffer(body, dtype="<f8", count=dim).copy()
    pars = np.frombuffer(body, dtype="i1", count=dim, offset=dim * 8).copy()
    vecs_cm = np.frombuffer(body, dtype="<f8", count=dim * dim, offset=dim * 9)
    vecs = vecs_cm.reshape(dim, dim, order="F").copy(order="F")
    return _spectral_from_dense(p, vals, pars, vecs)


def _spectral_from_dense(p: ModelParams, vals: np.ndarray, pars: np.ndarray, vecs: np.ndarray) -> SpectralData:
    """Rebuild the block representation from a full eigenvector matrix."""
    idx_even, idx_odd = parity_block_indices(p)
    blocks = []
    block_of = np.empty(len(vals), dtype=np.int32)
    col_of = np.empty(len(vals), dtype=np.int64)
    for b, (parity, indices) in enumerate(((1, idx_even), (-1, idx_odd))):
        cols = np.flatnonzero(pars == parity)
        blocks.append(BlockEigen(parity, indices, vals[cols].copy(),
                                 np.asfortranarray(vecs[np.ix_(indices, cols)])))
        block_of[cols] = b
        col_of[cols] = np.arange(len(cols))
    return SpectralData(p, vals, pars, blocks, block_of, col_of)


def cache_lookup(cache_dir: str, p: ModelParams) -> SpectralData | None:
    """Return cached SpectralData for these parameters, or None on a miss.

    Corrupt files are reported with a warning and treated as a miss.
    """
    path = cache_path(cache_dir, p)
    if not os.path.exists(path):
        return None
    try:
        return _read_cache_file(path, p)
    except CacheCorruptionError as exc:
        warnings.warn(f"ignoring corrupt spectra cache file: {exc}")
        return None

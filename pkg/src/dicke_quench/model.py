"""Truncated Dicke-model Hilbert space and operator assembly.

The model couples N two-level atoms (splitting ``omega0``) to a single
bosonic mode (frequency ``omega``) with coupling strength ``coupling``:

    H = omega0 * J_z + omega * a'a + (2*coupling/sqrt(N)) * J_x * (a' + a)

Everything is represented in the product basis |j, m> x |n> with j = N/2
fixed to the maximal angular-momentum sector, m = -j..j and photon number
n = 0..n_max.  The basis is *atom major*: flat index = m_index*(n_max+1) + n
with m_index = m + j in 0..N.  This layout lets a state reshape to an
(N+1, n_max+1) matrix so the photon trace is a single dense product.

All matrix elements of H are real in this basis, so H is stored as a real
symmetric matrix.  The parity operator exp(i*pi*[J + J_z + a'a]) acts
diagonally with eigenvalue (-1)**(m_index + n); H never connects the two
parity sectors.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import CapacityError, InvalidParamsError

# Dense storage guard: a (D, D) float64 matrix for D above this would not be
# a sensible dense target no matter the host.
DENSE_DIMENSION_LIMIT = 60_000


@dataclass(frozen=True)
class ModelParams:
    """Couplings and truncation that identify one Dicke Hamiltonian.

    Attributes
    ----------
    n_atoms : int
        Number of two-level atoms N (j = N/2, maximal sector only).
    omega : float
        Photon frequency, > 0.
    omega0 : float
        Atomic level splitting, > 0.
    coupling : float
        Atom-photon coupling strength, >= 0.
    n_max : int
        Photon Fock-space cutoff; basis keeps n = 0..n_max.
    """

    n_atoms: int
    omega: float
    omega0: float
    coupling: float
    n_max: int

    def __post_init__(self):
        if not isinstance(self.n_atoms, (int, np.integer)) or self.n_atoms < 1:
            raise InvalidParamsError(f"n_atoms must be a positive integer, got {self.n_atoms!r}")
        if not isinstance(self.n_max, (int, np.integer)) or self.n_max < 0:
            raise InvalidParamsError(f"n_max must be a nonnegative integer, got {self.n_max!r}")
        object.__setattr__(self, "n_atoms", int(self.n_atoms))
        object.__setattr__(self, "n_max", int(self.n_max))
        object.__setattr__(self, "omega", float(self.omega))
        object.__setattr__(self, "omega0", float(self.omega0))
        object.__setattr__(self, "coupling", float(self.coupling))
        if not (self.omega > 0.0) or not (self.omega0 > 0.0):
            raise InvalidParamsError("omega and omega0 must be positive")
        if not (self.coupling >= 0.0) or not math.isfinite(self.coupling):
            raise InvalidParamsError(f"coupling must be finite and >= 0, got {self.coupling!r}")
        if self.dimension > DENSE_DIMENSION_LIMIT:
            raise CapacityError(
                f"dense dimension {self.dimension} exceeds limit {DENSE_DIMENSION_LIMIT}"
            )

    @property
    def j(self) -> float:
        """Collective spin j = N/2 (maximal sector)."""
        return self.n_atoms / 2.0

    @property
    def dimension(self) -> int:
        """Hilbert-space dimension D = (N+1) * (n_max+1)."""
        return (self.n_atoms + 1) * (self.n_max + 1)

    def lambda_c(self) -> float:
        """Critical coupling sqrt(omega*omega0)/2 of the superradiant transition."""
        return math.sqrt(self.omega * self.omega0) / 2.0

    def with_coupling(self, coupling: float) -> "ModelParams":
        """Same system at a different coupling strength."""
        return replace(self, coupling=float(coupling))

    def with_n_max(self, n_max: int) -> "ModelParams":
        """Same system at a different photon cutoff."""
        return replace(self, n_max=int(n_max))


def basis_quantum_numbers(p: ModelParams) -> tuple[np.ndarray, np.ndarray]:
    """Return (m_index, n) arrays indexed by flat basis position."""
    n_ph = p.n_max + 1
    flat = np.arange(p.dimension)
    return flat // n_ph, flat % n_ph


def flat_index(p: ModelParams, m_index: int, n: int) -> int:
    """Flat position of basis state |m_index - j> x |n> (atom-major layout)."""
    if not (0 <= m_index <= p.n_atoms and 0 <= n <= p.n_max):
        raise InvalidParamsError(f"basis labels out of range: m_index={m_index}, n={n}")
    return m_index * (p.n_max + 1) + n


def build_parity_diagonal(p: ModelParams) -> np.ndarray:
    """Diagonal of the parity operator: (-1)**(j+m+n) = (-1)**(m_index+n) per basis state."""
    m_idx, n = basis_quantum_numbers(p)
    return np.where((m_idx + n) % 2 == 0, 1, -1).astype(np.int8)


def parity_block_indices(p: ModelParams) -> tuple[np.ndarray, np.ndarray]:
    """Flat basis indices of the even (+1) and odd (-1) parity sectors, ascending."""
    par = build_parity_diagonal(p)
    idx = np.arange(p.dimension)
    return idx[par == 1], idx[par == -1]


def number_operator_diagonal(p: ModelParams) -> np.ndarray:
    """Diagonal of the photon number operator a'a in the product basis."""
    _, n = basis_quantum_numbers(p)
    return n.astype(np.float64)


def atomic_inversion_diagonal(p: ModelParams) -> np.ndarray:
    """Diagonal of J_z: m = m_index - j per basis state."""
    m_idx, _ = basis_quantum_numbers(p)
    return m_idx.astype(np.float64) - p.j


def _raising_coefficients(p: ModelParams) -> np.ndarray:
    """c(m) = sqrt(j(j+1) - m(m+1)) for m = -j .. j-1 (the J+ ladder)."""
    j = p.j
    m = np.arange(p.n_atoms, dtype=np.float64) - j  # m_index = 0..N-1
    return np.sqrt(j * (j + 1.0) - m * (m + 1.0))


def build_hamiltonian(p: ModelParams) -> np.ndarray:
    """Assemble the dense real-symmetric Hamiltonian in the product basis.

    Diagonal entries are omega0*m + omega*n.  The coupling contributes
    (coupling/sqrt(N)) * c(m) * sqrt(n+1 or n) on elements connecting
    (m, n) <-> (m+1, n+1) and (m, n) <-> (m+1, n-1); the matrix is
    symmetrized exactly by mirroring each stored element.

    Returns
    -------
    numpy.ndarray
        (D, D) float64 array, bitwise symmetric.
    """
    n_ph = p.n_max + 1
    dim = p.dimension
    h = np.zeros((dim, dim))
    m_idx, n = basis_quantum_numbers(p)
    h[np.arange(dim), np.arange(dim)] = p.omega0 * (m_idx - p.j) + p.omega * n

    if p.coupling > 0.0 and p.n_max >= 1:
        g = p.coupling / math.sqrt(p.n_atoms)
        c_up = _raising_coefficients(p)
        sq = np.sqrt(np.arange(1, n_ph))  # sqrt(1..n_max)
        for mi in range(p.n_atoms):
            row0 = (mi + 1) * n_ph
            col0 = mi * n_ph
            # a' term: (m, n) -> (m+1, n+1)
            rows = row0 + np.arange(1, n_ph)
            cols = col0 + np.arange(0, n_ph - 1)
            h[rows, cols] = g * c_up[mi] * sq
            h[cols, rows] = h[rows, cols]
            # a term: (m, n) -> (m+1, n-1)
            rows = row0 + np.arange(0, n_ph - 1)
            cols = col0 + np.arange(1, n_ph)
            h[rows, cols] = g * c_up[mi] * sq
            h[cols, rows] = h[rows, cols]
    return h


def block_photon_numbers(p: ModelParams, parity: int) -> list[np.ndarray]:
    """Photon numbers kept in the given parity sector, per m_index.

    For sector s the allowed n at each m_index satisfy (-1)**(m_index+n) = s,
    i.e. n runs over every other integer starting at (bit - m_index) mod 2
    with bit = 0 for s=+1 and bit = 1 for s=-1.
    """
    bit = 0 if parity == 1 else 1
    out = []
    for mi in range(p.n_atoms + 1):
        start = (bit - mi) % 2
        out.append(np.arange(start, p.n_max + 1, 2))
    return out


def build_hamiltonian_block(p: ModelParams, parity: int, order: str = "F") -> np.ndarray:
    """Assemble one parity sector of H as a dense symmetric matrix.

    The sector basis is the parity-filtered product basis in ascending flat
    order, which is what :func:`parity_block_indices` returns.  Building the
    block directly avoids materializing the full (D, D) matrix.

    Parameters
    ----------
    parity : int
        +1 or -1.
    order : str
        Memory layout of the returned array ('F' suits LAPACK drivers).
    """
    if parity not in (1, -1):
        raise InvalidParamsError(f"parity must be +1 or -1, got {parity!r}")
    ns = block_photon_numbers(p, parity)
    sizes = [len(a) for a in ns]
    offsets = np.concatenate([[0], np.cumsum(sizes)])
    nb = int(offsets[-1])
    h = np.zeros((nb, nb), order=order)

    # diagonal
    for mi in range(p.n_atoms + 1):
        sl = slice(offsets[mi], offsets[mi + 1])
        h[sl, sl][np.diag_indices(sizes[mi])] = p.omega0 * (mi - p.j) + p.omega * ns[mi]

    if p.coupling > 0.0 and p.n_max >= 1:
        g = p.coupling / math.sqrt(p.n_atoms)
        c_up = _raising_coefficients(p)
        for mi in range(p.n_atoms):
            n_lo = ns[mi]
            n_hi = ns[mi + 1]
            # positions within each m_index group are (n - n[0]) // 2
            for delta, weight in ((1, np.sqrt(n_lo + 1.0)), (-1, np.sqrt(n_lo.astype(float)))):
                target = n_lo + delta
                ok = (target >= 0) & (target <= p.n_max)
                if not np.any(ok):
                    continue
                rows = offsets[mi + 1] + (target[ok] - n_hi[0]) // 2
                cols = offsets[mi] + np.flatnonzero(ok)
                h[rows, cols] = g * c_up[mi] * weight[ok]
                h[cols, rows] = h[rows, cols]
    return h


def apply_hamiltonian(p: ModelParams, vec: np.ndarray) -> np.ndarray:
    """Matrix-free H @ vec in the product basis.

    Works on real or complex vectors of length D without building the dense
    matrix; useful for energy expectation values at large cutoffs.
    """
    if vec.shape != (p.dimension,):
        raise InvalidParamsError(f"vector length {vec.shape} does not match dimension {p.dimension}")
    n_ph = p.n_max + 1
    psi = vec.reshape(p.n_atoms + 1, n_ph)
    m = np.arange(p.n_atoms + 1) - p.j
    n = np.arange(n_ph)
    out = (p.omega0 * m[:, None] + p.omega * n[None, :]) * psi
    if p.coupling > 0.0 and p.n_max >= 1:
        g = p.coupling / math.sqrt(p.n_atoms)
        c_up = _raising_coefficients(p)[:, None]
        sq = np.sqrt(n[1:])  # sqrt(1..n_max)
        up = c_up * psi[:-1]  # amplitude at (m, .) feeding (m+1, .)
        down = c_up * psi[1:]  # amplitude at (m+1, .) feeding (m, .)
        out[1:, 1:] += g * up[:, :-1] * sq
        out[1:, :-1] += g * up[:, 1:] * sq
        out[:-1, 1:] += g * down[:, :-1] * sq
        out[:-1, :-1] += g * down[:, 1:] * sq
    return out.reshape(p.dimension)


def energy_expectation(p: ModelParams, vec: np.ndarray) -> float:
    """<vec| H |vec> via the matrix-free product (vec need not be normalized)."""
    return float(np.real(np.vdot(vec, apply_hamiltonian(p, vec))))

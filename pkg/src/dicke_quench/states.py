"""Initial-state preparation: coherent products and parity superpositions.

The superradiant ground state at coupling lambda_i is well approximated by a
separable product |mu> x |nu> of an atomic (SU(2)) and a bosonic coherent
state whose parameters minimize the classical energy surface.  The two sign
branches (mu, nu anti-correlated) are degenerate; any normalized combination
alpha * |mu+, nu-> + beta * |mu-, nu+> is an equally valid starting point.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln
from scipy.stats import poisson

from .errors import CutoffTooSmallError, InvalidParamsError
from .model import ModelParams

DEFAULT_TAIL_TOL = 1e-12


@dataclass(frozen=True)
class CoherentParams:
    """Variational coherent-state parameters for one sign branch.

    ``mu`` is the atomic coherent parameter (|mu| < 1 for finite coupling),
    ``nu`` the bosonic displacement; ``branch`` records which sign of mu was
    taken (nu carries the opposite sign).
    """

    mu: float
    nu: float
    branch: int


@dataclass
class StateVector:
    """Pure state in the atom-major product basis of ``params``.

    Amplitudes are complex and unit-normalized (within roundoff) by every
    constructor in this module and by spectral time evolution.
    """

    params: ModelParams
    amplitudes: np.ndarray

    @property
    def dimension(self) -> int:
        return self.params.dimension

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def amplitude_matrix(self) -> np.ndarray:
        """(N+1, n_max+1) view of the amplitudes (atoms x photons)."""
        return self.amplitudes.reshape(self.params.n_atoms + 1, self.params.n_max + 1)


def same_basis(a: ModelParams, b: ModelParams) -> bool:
    """True when two parameter sets share the same product basis and frequencies."""
    return (
        a.n_atoms == b.n_atoms
        and a.n_max == b.n_max
        and a.omega == b.omega
        and a.omega0 == b.omega0
    )


def variational_params(p: ModelParams, branch: int = 1) -> CoherentParams:
    """Energy-minimizing coherent parameters at coupling ``p.coupling``.

    For lambda <= lambda_c the normal-phase solution mu = nu = 0 is returned.
    Above it:

        mu = +-sqrt((l^2 - lc^2) / (l^2 + lc^2))
        nu = -+(sqrt(2 j)/omega) * sqrt(l^4 - lc^4) / l

    with anti-correlated signs selected by ``branch``.
    """
    if branch not in (1, -1):
        raise InvalidParamsError(f"branch must be +1 or -1, got {branch!r}")
    lam = p.coupling
    if lam < 0:
        raise InvalidParamsError("coupling must be nonnegative")
    lam_c = p.lambda_c()
    if lam <= lam_c:
        return CoherentParams(0.0, 0.0, branch)
    mu = branch * math.sqrt((lam**2 - lam_c**2) / (lam**2 + lam_c**2))
    nu = -branch * (math.sqrt(2.0 * p.j) / p.omega) * math.sqrt(lam**4 - lam_c**4) / lam
    return CoherentParams(mu, nu, branch)


def atomic_coherent_amplitudes(n_atoms: int, mu: float) -> np.ndarray:
    """Amplitudes of the SU(2) coherent state (1+mu^2)^(-j) e^(mu J+) |j,-j>.

    Component k (= m_index = m + j) is (1+mu^2)^(-j) * binom(2j, k)^(1/2) * mu^k;
    computed in log space so large N stays stable.
    """
    k = np.arange(n_atoms + 1)
    if mu == 0.0:
        amps = np.zeros(n_atoms + 1)
        amps[0] = 1.0
        return amps
    j = n_atoms / 2.0
    log_mag = (
        -j * math.log1p(mu * mu)
        + 0.5 * (gammaln(n_atoms + 1) - gammaln(k + 1) - gammaln(n_atoms - k + 1))
        + k * math.log(abs(mu))
    )
    sign = np.where(k % 2 == 0, 1.0, math.copysign(1.0, mu))
    return sign * np.exp(log_mag)


def boson_coherent_amplitudes(n_max: int, nu: float, tail_tol: float = DEFAULT_TAIL_TOL) -> np.ndarray:
    """Truncated amplitudes e^(-nu^2/2) nu^n / sqrt(n!), renormalized.

    Raises CutoffTooSmallError when the exact weight beyond the cutoff (a
    Poisson tail with mean nu^2) exceeds ``tail_tol``.
    """
    n = np.arange(n_max + 1)
    if nu == 0.0:
        amps = np.zeros(n_max + 1)
        amps[0] = 1.0
        return amps
    tail = float(poisson.sf(n_max, nu * nu))
    if tail > tail_tol:
        raise CutoffTooSmallError(
            f"photon tail beyond n_max={n_max} is {tail:.3e} > {tail_tol:.1e} "
            f"for displacement nu={nu:.6g} (need n_max >~ nu^2 + 7*|nu|)"
        )
    log_mag = -0.5 * nu * nu + n * math.log(abs(nu)) - 0.5 * gammaln(n + 1.0)
    sign = np.where(n % 2 == 0, 1.0, math.copysign(1.0, nu))
    amps = sign * np.exp(log_mag)
    return amps / np.linalg.norm(amps)


def minimal_photon_cutoff(nu: float, tail_tol: float = DEFAULT_TAIL_TOL, margin: int = 8) -> int:
    """Smallest n_max (plus a safety margin) holding a displacement nu to tail_tol."""
    if nu == 0.0:
        return margin
    mean = nu * nu
    n = int(poisson.isf(tail_tol, mean))
    while poisson.sf(n, mean) > tail_tol:
        n += 1
    return n + margin


def coherent_product(p: ModelParams, cp: CoherentParams, tail_tol: float = DEFAULT_TAIL_TOL) -> StateVector:
    """Separable product state |mu> x |nu> on the truncated basis of ``p``."""
    atom = atomic_coherent_amplitudes(p.n_atoms, cp.mu)
    boson = boson_coherent_amplitudes(p.n_max, cp.nu, tail_tol)
    amps = np.outer(atom, boson).ravel().astype(np.complex128)
    amps /= np.linalg.norm(amps)
    return StateVector(p, amps)


def superpose(s1: StateVector, s2: StateVector, alpha: complex, beta: complex) -> StateVector:
    """Normalized combination alpha*s1 + beta*s2 (states need not be orthogonal)."""
    if s1.params != s2.params:
        raise InvalidParamsError("superpose requires states on the same basis and parameters")
    if alpha == 0 and beta == 0:
        raise InvalidParamsError("superpose needs at least one nonzero coefficient")
    amps = alpha * s1.amplitudes + beta * s2.amplitudes
    norm = np.linalg.norm(amps)
    if norm < 1e-12:
        raise InvalidParamsError("superposition cancels to the zero vector")
    return StateVector(s1.params, amps / norm)


def coherent_ground_state(
    p: ModelParams,
    alpha: complex = 1.0,
    beta: complex = 0.0,
    tail_tol: float = DEFAULT_TAIL_TOL,
) -> StateVector:
    """Quench initial state: alpha |mu+, nu-> + beta |mu-, nu+> at p.coupling.

    alpha=1, beta=0 (the default working point) selects the symmetry-broken
    product branch; alpha = 1/sqrt(2), beta = +-1/sqrt(2) give the
    definite-parity combinations.
    """
    plus = coherent_product(p, variational_params(p, 1), tail_tol)
    if beta == 0:
        if alpha == 0:
            raise InvalidParamsError("alpha and beta cannot both vanish")
        return StateVector(p, plus.amplitudes * (alpha / abs(alpha)))
    minus = coherent_product(p, variational_params(p, -1), tail_tol)
    return superpose(plus, minus, alpha, beta)


def superposition_entropy(alpha: complex, beta: complex) -> float:
    """Initial atom-photon entropy of the (orthogonal-branch) combination.

    log(|a|^2+|b|^2) - (|a|^2 log|a|^2 + |b|^2 log|b|^2)/(|a|^2+|b|^2),
    exact when the two branch products are orthogonal (they are, up to
    exponentially small overlap at large N and coupling).
    """
    wa, wb = abs(alpha) ** 2, abs(beta) ** 2
    tot = wa + wb
    if tot == 0:
        raise InvalidParamsError("alpha and beta cannot both vanish")
    acc = 0.0
    for w in (wa, wb):
        if w > 0:
            acc += w * math.log(w)
    return math.log(tot) - acc / tot

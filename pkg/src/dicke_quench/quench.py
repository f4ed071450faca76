"""Sudden quench lambda_i -> lambda_f: occupations, entropies, heat ledger.

The protocol: prepare the coherent ground state at lambda_i, freeze it, and
evolve under H(lambda_f).  Because |C_n| = |<E_n(lambda_f)|psi(0)>| are
constants of motion, the occupation distribution P(E_n) = |C_n|^2, the
diagonal entropy S_d = -sum P log P, and the heat ledger are all fixed at
the instant of the quench; time evolution only rotates phases.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidParamsError, NumericalFailureError, PairingError
from .model import ModelParams, energy_expectation
from .spectral import SpectralData
from .states import StateVector, coherent_ground_state, same_basis

# occupations below this floor are excluded from the entropy sum (0 log 0 := 0)
ENTROPY_FLOOR = 1e-300

OCCUPATION_SUM_TOL = 1e-8


@dataclass(frozen=True)
class QuenchSpec:
    """One sudden quench: shared system, initial and final couplings.

    delta_lambda follows the downward convention lambda_i - lambda_f.
    ``alpha`` and ``beta`` pick the initial combination of the two degenerate
    coherent branches (defaults: the pure product branch).
    """

    n_atoms: int
    omega: float
    omega0: float
    lambda_i: float
    lambda_f: float
    n_max: int
    alpha: complex = 1.0 + 0.0j
    beta: complex = 0.0 + 0.0j

    def __post_init__(self):
        if self.lambda_i < 0 or self.lambda_f < 0:
            raise InvalidParamsError("couplings must be nonnegative")

    @property
    def delta_lambda(self) -> float:
        return self.lambda_i - self.lambda_f

    def params_i(self) -> ModelParams:
        return ModelParams(self.n_atoms, self.omega, self.omega0, self.lambda_i, self.n_max)

    def params_f(self) -> ModelParams:
        return ModelParams(self.n_atoms, self.omega, self.omega0, self.lambda_f, self.n_max)


@dataclass
class QuenchResult:
    """Occupations and derived scalars of one quench.

    ``occupations[k]`` is P(E_k) against the final eigenbasis in ascending
    energy order; ``energies_over_j`` the matching eigenvalues per J.  The
    energy ledger: delta_e = <H_f> - <H_i>, heat = <H_f> - E0(lambda_f),
    work_reversible = delta_e - heat.  All energies in the Hamiltonian's
    units, entropies in nats.
    """

    spec: QuenchSpec
    occupations: np.ndarray = field(repr=False)
    energies_over_j: np.ndarray = field(repr=False)
    s_diag: float = 0.0
    delta_e: float = 0.0
    heat: float = 0.0
    work_reversible: float = 0.0
    e95_over_j: float = 0.0
    mean_final_energy_over_j: float = 0.0


def shannon_entropy(probabilities: np.ndarray) -> float:
    """-sum p log p in nats with the 0 log 0 := 0 floor convention."""
    p = np.asarray(probabilities)
    p = p[p > ENTROPY_FLOOR]
    return float(-np.sum(p * np.log(p)))


def e95_from_distribution(energies: np.ndarray, occupations: np.ndarray, quantile: float = 0.95) -> float:
    """Smallest energy at which the cumulative occupation reaches ``quantile``."""
    cum = np.cumsum(occupations)
    k = int(np.searchsorted(cum, quantile, side="left"))
    return float(energies[min(k, len(energies) - 1)])


def run_quench(q: QuenchSpec, spec_f: SpectralData, initial_state: StateVector | None = None) -> QuenchResult:
    """Project the initial state on the final eigenbasis and build the ledger.

    ``spec_f`` must be a full (unwindowed) decomposition at the final
    coupling with matching (N, omega, omega0, n_max).
    """
    if spec_f.params != q.params_f():
        raise PairingError(f"spectral data {spec_f.params} does not match quench target {q.params_f()}")
    if spec_f.window is not None:
        raise PairingError("run_quench requires a full spectral decomposition, not an energy window")
    if initial_state is None:
        initial_state = coherent_ground_state(q.params_i(), q.alpha, q.beta)
    elif not same_basis(initial_state.params, spec_f.params):
        raise PairingError("initial state lives on a different basis than the spectral data")

    amps = initial_state.amplitudes
    coeff = spec_f.overlaps(amps)
    occ = np.abs(coeff) ** 2
    total = float(occ.sum())
    if abs(total - 1.0) > OCCUPATION_SUM_TOL:
        raise NumericalFailureError(
            f"occupations sum to {total}, expected 1 within {OCCUPATION_SUM_TOL}", params=q
        )

    j = q.n_atoms / 2.0
    e_final = energy_expectation(q.params_f(), amps)
    e_initial = energy_expectation(q.params_i(), amps)
    heat = e_final - spec_f.ground_energy()
    return QuenchResult(
        spec=q,
        occupations=occ,
        energies_over_j=spec_f.eigenvalues / j,
        s_diag=shannon_entropy(occ),
        delta_e=e_final - e_initial,
        heat=heat,
        work_reversible=(e_final - e_initial) - heat,
        e95_over_j=e95_from_distribution(spec_f.eigenvalues / j, occ),
        mean_final_energy_over_j=e_final / j,
    )


def evolve(state0: StateVector, spec_f: SpectralData, t: float) -> StateVector:
    """Spectral time evolution: |psi(t)> = sum_n C_n exp(-i E_n t) |E_n>.

    Phase convention exp(-i E t); every observable in this package is
    invariant under the opposite sign.
    """
    if not same_basis(state0.params, spec_f.params):
        raise PairingError("state and spectral data live on different bases")
    if spec_f.window is not None:
        raise PairingError("evolve requires a full spectral decomposition")
    out = np.zeros(state0.dimension, dtype=np.complex128)
    for blk in spec_f.blocks:
        c = blk.vectors.T @ state0.amplitudes[blk.indices]
        out[blk.indices] = blk.vectors @ (c * np.exp(-1j * blk.energies * t))
    return StateVector(spec_f.params, out)


def energy_distribution_series(result: QuenchResult) -> np.ndarray:
    """(size, 2) array of (E_n/J, P(E_n)) pairs sorted by energy."""
    return np.column_stack([result.energies_over_j, result.occupations])


def e95(result: QuenchResult, quantile: float = 0.95) -> float:
    """Energy per J below which ``quantile`` of the occupation lies."""
    return e95_from_distribution(result.energies_over_j, result.occupations, quantile)


# ---------------------------------------------------------------------------
# CSV export (one row per quench in a sweep)
# ---------------------------------------------------------------------------

SWEEP_CSV_HEADER = (
    "lambda_i,lambda_f,delta_lambda,deltaE_over_J,Q_over_J,S_d,E95_over_J,"
    "S_ent_equilibrium,Q_mf_over_J"
)


@dataclass(frozen=True)
class SweepRecord:
    """One row of a quench-sweep CSV."""

    lambda_i: float
    lambda_f: float
    delta_lambda: float
    delta_e_over_j: float
    q_over_j: float
    s_diag: float
    e95_over_j: float
    s_ent_equilibrium: float
    q_mf_over_j: float


def format_float(x: float) -> str:
    """Round-trip-safe decimal text (17 significant digits)."""
    return f"{x:.17g}"


def write_sweep_csv(path: str, records: list[SweepRecord]) -> None:
    """Write sweep records with the mandatory header, 17 significant digits."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(SWEEP_CSV_HEADER + "\n")
        for r in records:
            fh.write(
                ",".join(
                    format_float(v)
                    for v in (
                        r.lambda_i,
                        r.lambda_f,
                        r.delta_lambda,
                        r.delta_e_over_j,
                        r.q_over_j,
                        r.s_diag,
                        r.e95_over_j,
                        r.s_ent_equilibrium,
                        r.q_mf_over_j,
                    )
                )
                + "\n"
            )

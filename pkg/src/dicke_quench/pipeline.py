"""Campaign orchestration: shared spectral solves, streaming consumers, caching.

A *campaign* is one final Hamiltonian H(lambda_f) analyzed against a set of
initial couplings lambda_i.  The expensive object, the spectral solve, is
computed once per campaign; everything downstream (occupations, entropies,
heat ledger, lattice expectations, diagonal-ensemble reductions, time
traces) is derived from it.

Two execution modes:

* streaming (default): each parity block is solved, its per-state artifacts
  are projected out, and the eigenvector block is freed before the next one
  is factorized.  Peak memory stays near two block-sized matrices even for
  cutoffs in the thousands.
* held: when entanglement time traces are requested the evolved state mixes
  both parity sectors, so the blocks are kept and the entanglement module
  consumes them directly.

Campaign results can be cached on disk as compressed arrays keyed by the
full request (parameters, jobs, window, grids), making repeated analyses
and reruns of the acceptance suite cheap.
"""

from __future__ import annotations

import json
import os
import tempfile
from dataclasses import dataclass, field
from hashlib import sha256

import numpy as np

from .entanglement import (
    EntropyTrace,
    diagonal_ensemble_rho,
    entropy_timeseries,
    shannon_entropy,
)
from .errors import InvalidParamsError, NumericalFailureError
from .meanfield import DomainError, heat_general
from .model import ModelParams, energy_expectation, number_operator_diagonal
from .quench import QuenchSpec, e95_from_distribution, write_sweep_csv, SweepRecord
from .spectral import (SpectralData, assemble_blocks, column_diag_expectations,
                       iter_block_eigens, real_mat_vec)
from .states import StateVector, coherent_ground_state, minimal_photon_cutoff, variational_params

ARTIFACT_FORMAT_VERSION = 3

# weight allowed beyond an energy window before windowed scalars are refused
WINDOW_TAIL_TOL = 1e-9

OCCUPATION_SUM_TOL = 1e-8


@dataclass(frozen=True)
class QuenchJob:
    """One initial condition to be analyzed against the campaign's H(lambda_f)."""

    lambda_i: float
    alpha: complex = 1.0 + 0.0j
    beta: complex = 0.0 + 0.0j
    want_rho: bool = True
    want_trace: bool = False


@dataclass
class JobArtifacts:
    """Everything derived for one quench within a campaign."""

    lambda_i: float
    occupations: np.ndarray = field(repr=False)
    tail_mass: float = 0.0
    s_diag: float = 0.0
    heat: float = 0.0
    delta_e: float = 0.0
    work_reversible: float = 0.0
    e95_over_j: float = 0.0
    mean_final_energy_over_j: float = 0.0
    s_ent_equilibrium: float | None = None
    rho_diag: np.ndarray | None = None
    trace: EntropyTrace | None = None


@dataclass
class CampaignResult:
    """Spectral summary plus per-job artifacts of one campaign."""

    params_f: ModelParams
    e_max: float | None
    eigenvalues: np.ndarray
    parities: np.ndarray
    number_expectations: np.ndarray | None
    jobs: list[JobArtifacts]

    @property
    def energies_over_j(self) -> np.ndarray:
        return self.eigenvalues / (self.params_f.n_atoms / 2.0)


def suggest_quench_cutoff(
    n_atoms: int,
    omega: float,
    omega0: float,
    lambda_is: list[float],
    headroom: int = 0,
) -> int:
    """Smallest certified cutoff holding the coherent states of every lambda_i.

    ``headroom`` adds photon shells on top (analyses of highly excited final
    eigenstates need more room than the initial states themselves).
    """
    worst = 8
    for li in lambda_is:
        probe = ModelParams(n_atoms, omega, omega0, li, 8)
        worst = max(worst, minimal_photon_cutoff(variational_params(probe).nu))
    return worst + headroom


def _job_state(p_f: ModelParams, job: QuenchJob) -> StateVector:
    p_i = p_f.with_coupling(job.lambda_i)
    return coherent_ground_state(p_i, job.alpha, job.beta)


def _scalar_artifacts(
    p_f: ModelParams,
    job: QuenchJob,
    state: StateVector,
    eigenvalues: np.ndarray,
    occupations: np.ndarray,
    windowed: bool,
) -> JobArtifacts:
    j = p_f.n_atoms / 2.0
    total = float(occupations.sum())
    tail = 1.0 - total
    if windowed:
        if tail > WINDOW_TAIL_TOL:
            raise NumericalFailureError(
                f"energy window keeps only {total:.12f} of the lambda_i={job.lambda_i} state"
            )
    elif abs(tail) > OCCUPATION_SUM_TOL:
        raise NumericalFailureError(f"occupations sum to {total}, expected 1")
    p_i = p_f.with_coupling(job.lambda_i)
    e_f = energy_expectation(p_f, state.amplitudes)
    e_i = energy_expectation(p_i, state.amplitudes)
    heat = e_f - float(eigenvalues[0])
    return JobArtifacts(
        lambda_i=job.lambda_i,
        occupations=occupations,
        tail_mass=max(tail, 0.0),
        s_diag=shannon_entropy(occupations),
        heat=heat,
        delta_e=e_f - e_i,
        work_reversible=(e_f - e_i) - heat,
        e95_over_j=e95_from_distribution(eigenvalues / j, occupations),
        mean_final_energy_over_j=e_f / j,
    )


def _quench_spec(p_f: ModelParams, job: QuenchJob) -> QuenchSpec:
    return QuenchSpec(
        p_f.n_atoms, p_f.omega, p_f.omega0, job.lambda_i, p_f.coupling, p_f.n_max, job.alpha, job.beta
    )


def _run_streaming(p_f, jobs, states, window, want_lattice, verify) -> CampaignResult:
    n_row = p_f.n_atoms + 1
    n_col = p_f.n_max + 1
    ndiag = number_operator_diagonal(p_f)
    chunks = []  # per block: energies, parities, per-job coefficients, <n>
    rho_acc = [np.zeros((n_row, n_row)) if job.want_rho else None for job in jobs]
    for blk in iter_block_eigens(p_f, vectors=True, window=window, verify=verify):
        rec = {
            "energies": blk.energies,
            "parity": blk.parity,
            "coeff": [real_mat_vec(blk.vectors.T, st.amplitudes[blk.indices]) for st in states],
            "nexp": column_diag_expectations(blk.vectors, ndiag[blk.indices]) if want_lattice else None,
        }
        for a, (job, acc) in enumerate(zip(jobs, rho_acc)):
            if acc is None:
                continue
            w = np.abs(rec["coeff"][a]) ** 2
            root = np.sqrt(w)
            for start in range(0, blk.size, 64):
                cols = slice(start, min(start + 64, blk.size))
                scaled = blk.vectors[:, cols] * root[cols][None, :]
                padded = np.zeros((p_f.dimension, scaled.shape[1]))
                padded[blk.indices] = scaled
                acc += np.tensordot(
                    padded.reshape(n_row, n_col, -1), padded.reshape(n_row, n_col, -1),
                    axes=([1, 2], [1, 2]),
                )
        chunks.append(rec)
        blk.vectors = None  # free before the next factorization

    energies = np.concatenate([c["energies"] for c in chunks])
    parities = np.concatenate([np.full(len(c["energies"]), c["parity"], dtype=np.int8) for c in chunks])
    order = np.lexsort((np.where(parities == 1, 0, 1), energies))
    energies, parities = energies[order], parities[order]
    nexp = np.concatenate([c["nexp"] for c in chunks])[order] if want_lattice else None

    artifacts = []
    for a, (job, state) in enumerate(zip(jobs, states)):
        occ = np.concatenate([np.abs(c["coeff"][a]) ** 2 for c in chunks])[order]
        art = _scalar_artifacts(p_f, job, state, energies, occ, window is not None)
        if job.want_rho:
            rho = rho_acc[a]
            if window is not None:
                rho = rho / max(1.0 - art.tail_mass, 1e-300)
            art.rho_diag = rho
            art.s_ent_equilibrium = shannon_entropy(np.clip(np.linalg.eigvalsh(rho), 0.0, None))
        artifacts.append(art)
    return CampaignResult(p_f, window[1] if window else None, energies, parities, nexp, artifacts)


def _run_held(p_f, jobs, states, window, want_lattice, t_grid, verify) -> CampaignResult:
    blocks = list(iter_block_eigens(p_f, vectors=True, window=window, verify=verify))
    spec = assemble_blocks(p_f, blocks, window)
    nexp = spec.number_expectations() if want_lattice else None
    artifacts = []
    for job, state in zip(jobs, states):
        occ = np.abs(spec.overlaps(state.amplitudes)) ** 2
        art = _scalar_artifacts(p_f, job, state, spec.eigenvalues, occ, window is not None)
        if job.want_rho:
            weights = occ if window is None else occ / max(occ.sum(), 1e-300)
            rho = diagonal_ensemble_rho(spec, weights)
            art.rho_diag = rho
            art.s_ent_equilibrium = shannon_entropy(np.clip(np.linalg.eigvalsh(rho), 0.0, None))
        if job.want_trace:
            art.trace = entropy_timeseries(_quench_spec(p_f, job), spec, t_grid, initial_state=state)
        artifacts.append(art)
    return CampaignResult(p_f, window[1] if window else None, spec.eigenvalues, spec.parities, nexp, artifacts)


def run_campaign(
    p_f: ModelParams,
    jobs: list[QuenchJob],
    e_max: float | None = None,
    want_lattice: bool = False,
    t_grid: np.ndarray | None = None,
    cache_dir: str | None = None,
    verify: bool = True,
) -> CampaignResult:
    """Analyze a set of quenches sharing one final Hamiltonian.

    ``e_max`` switches to an energy-windowed eigenvector pass [min(H), e_max];
    windowed scalars carry a certified tail bound (the retained occupation
    mass must reach 1 - 1e-9).  ``t_grid`` requests entanglement time traces
    for jobs flagged ``want_trace`` (this holds both parity blocks in
    memory).  With ``cache_dir`` the full result round-trips through a
    compressed artifact file keyed by the request.
    """
    if not jobs:
        raise InvalidParamsError("campaign needs at least one quench job")
    if t_grid is not None and not any(j.want_trace for j in jobs):
        raise InvalidParamsError("a time grid was given but no job wants a trace")
    if any(j.want_trace for j in jobs) and t_grid is None:
        raise InvalidParamsError("trace jobs need a time grid")

    key = _campaign_key(p_f, jobs, e_max, t_grid, want_lattice)
    if cache_dir is not None:
        cached = _load_artifacts(cache_dir, key, p_f, jobs, want_lattice, e_max)
        if cached is not None:
            return cached

    window = None if e_max is None else (-np.inf, float(e_max))
    states = [_job_state(p_f, job) for job in jobs]
    if t_grid is None:
        result = _run_streaming(p_f, jobs, states, window, want_lattice, verify)
    else:
        result = _run_held(p_f, jobs, states, window, want_lattice, t_grid, verify)
    if cache_dir is not None:
        _store_artifacts(cache_dir, key, result)
    return result


# ---------------------------------------------------------------------------
# ground-energy helper with a scalar cache (heat sweeps need only E0)
# ---------------------------------------------------------------------------


def ground_energy_cached(p: ModelParams, cache_dir: str | None = None) -> float:
    """Lowest eigenvalue of H(p); memoized on disk as a one-line JSON."""
    from .spectral import cache_key, ground_energy

    if cache_dir is None:
        return ground_energy(p)
    os.makedirs(cache_dir, exist_ok=True)
    path = os.path.join(cache_dir, f"ground_{cache_key(p)}.json")
    if os.path.exists(path):
        with open(path) as fh:
            return float(json.load(fh)["e0"])
    e0 = ground_energy(p)
    _atomic_write(path, json.dumps({"params": repr(p), "e0": e0}))
    return e0


def heat_numeric(
    n_atoms: int,
    omega: float,
    omega0: float,
    lambda_i: float,
    lambda_f: float,
    ground_n_max: int,
    cache_dir: str | None = None,
) -> float:
    """Exact dissipated heat per J: coherent <H_f> minus diagonalized E0.

    <H_f> is a matrix-free quadratic form at the initial state's own
    certified cutoff; E0 comes from an eigenvalue-only solve at
    ``ground_n_max`` (only the final ground state must converge there).
    Both pieces are cutoff-independent once certified, so they may use
    different cutoffs.
    """
    state_n_max = suggest_quench_cutoff(n_atoms, omega, omega0, [lambda_i])
    p_i = ModelParams(n_atoms, omega, omega0, lambda_i, state_n_max)
    state = coherent_ground_state(p_i)
    e_f = energy_expectation(p_i.with_coupling(lambda_f), state.amplitudes)
    e0 = ground_energy_cached(ModelParams(n_atoms, omega, omega0, lambda_f, ground_n_max), cache_dir)
    return (e_f - e0) / (n_atoms / 2.0)


def sweep_records(result: CampaignResult) -> list[SweepRecord]:
    """CSV rows for a campaign (one per job, ordered by lambda_i)."""
    rows = []
    j = result.params_f.n_atoms / 2.0
    lf = result.params_f.coupling
    for art in sorted(result.jobs, key=lambda a: a.lambda_i):
        try:
            q_mf = heat_general(art.lambda_i, lf, result.params_f.omega, result.params_f.omega0)
        except DomainError:
            q_mf = float("nan")
        rows.append(
            SweepRecord(
                lambda_i=art.lambda_i,
                lambda_f=lf,
                delta_lambda=art.lambda_i - lf,
                delta_e_over_j=art.delta_e / j,
                q_over_j=art.heat / j,
                s_diag=art.s_diag,
                e95_over_j=art.e95_over_j,
                s_ent_equilibrium=art.s_ent_equilibrium if art.s_ent_equilibrium is not None else float("nan"),
                q_mf_over_j=q_mf,
            )
        )
    return rows


def export_sweep(path: str, result: CampaignResult) -> None:
    write_sweep_csv(path, sweep_records(result))


# ---------------------------------------------------------------------------
# artifact cache
# ---------------------------------------------------------------------------


def _complex_repr(z: complex) -> str:
    return f"{float(np.real(z)).hex()},{float(np.imag(z)).hex()}"


def _campaign_key(p_f, jobs, e_max, t_grid, want_lattice) -> str:
    payload = {
        "version": ARTIFACT_FORMAT_VERSION,
        "N": p_f.n_atoms,
        "n_max": p_f.n_max,
        "omega": p_f.omega.hex(),
        "omega0": p_f.omega0.hex(),
        "lambda_f": p_f.coupling.hex(),
        "e_max": None if e_max is None else float(e_max).hex(),
        "lattice": bool(want_lattice),
        "t_grid": None if t_grid is None else [len(t_grid), float(t_grid[-1]).hex()],
        "jobs": [
            [float(j.lambda_i).hex(), _complex_repr(j.alpha), _complex_repr(j.beta), j.want_rho, j.want_trace]
            for j in jobs
        ],
    }
    return sha256(json.dumps(payload, sort_keys=True).encode()).hexdigest()[:32]


def _atomic_write(path: str, text: str) -> None:
    fd, tmp = tempfile.mkstemp(dir=os.path.dirname(path) or ".")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    finally:
        if os.path.exists(tmp):
            os.unlink(tmp)


def _store_artifacts(cache_dir: str, key: str, result: CampaignResult) -> None:
    os.makedirs(cache_dir, exist_ok=True)
    arrays = {
        "eigenvalues": result.eigenvalues,
        "parities": result.parities,
    }
    if result.number_expectations is not None:
        arrays["number_expectations"] = result.number_expectations
    scalars = []
    for a, art in enumerate(result.jobs):
        arrays[f"occ_{a}"] = art.occupations
        if art.rho_diag is not None:
            arrays[f"rho_{a}"] = art.rho_diag
        if art.trace is not None:
            arrays[f"trace_t_{a}"] = art.trace.times
            arrays[f"trace_s_{a}"] = art.trace.s_ent
        scalars.append(
            {
                "lambda_i": art.lambda_i,
                "tail_mass": art.tail_mass,
                "s_diag": art.s_diag,
                "heat": art.heat,
                "delta_e": art.delta_e,
                "work_reversible": art.work_reversible,
                "e95_over_j": art.e95_over_j,
                "mean_final_energy_over_j": art.mean_final_energy_over_j,
                "s_ent_equilibrium": art.s_ent_equilibrium,
            }
        )
    path = os.path.join(cache_dir, f"campaign_{key}.npz")
    fd, tmp = tempfile.mkstemp(dir=cache_dir, suffix=".npz")
    os.close(fd)
    try:
        np.savez_compressed(tmp, scalars=json.dumps(scalars), **arrays)
        os.replace(tmp, path)
    finally:
        if os.path.exists(tmp):
            os.unlink(tmp)


def _load_artifacts(cache_dir, key, p_f, jobs, want_lattice, e_max) -> CampaignResult | None:
    path = os.path.join(cache_dir, f"campaign_{key}.npz")
    if not os.path.exists(path):
        return None
    data = np.load(path, allow_pickle=False)
    scalars = json.loads(str(data["scalars"]))
    artifacts = []
    for a, (job, sc) in enumerate(zip(jobs, scalars)):
        trace = None
        if f"trace_t_{a}" in data:
            times = data[f"trace_t_{a}"]
            s_ent = data[f"trace_s_{a}"]
            half = len(times) // 2
            trace = EntropyTrace(times, s_ent, float(np.mean(s_ent[half:])), (float(times[half]), float(times[-1])))
        artifacts.append(
            JobArtifacts(
                lambda_i=sc["lambda_i"],
                occupations=data[f"occ_{a}"],
                tail_mass=sc["tail_mass"],
                s_diag=sc["s_diag"],
                heat=sc["heat"],
                delta_e=sc["delta_e"],
                work_reversible=sc["work_reversible"],
                e95_over_j=sc["e95_over_j"],
                mean_final_energy_over_j=sc["mean_final_energy_over_j"],
                s_ent_equilibrium=sc["s_ent_equilibrium"],
                rho_diag=data[f"rho_{a}"] if f"rho_{a}" in data else None,
                trace=trace,
            )
        )
    nexp = data["number_expectations"] if want_lattice and "number_expectations" in data else None
    return CampaignResult(p_f, e_max, data["eigenvalues"], data["parities"], nexp, artifacts)

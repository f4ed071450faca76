"""Peres-lattice chaos diagnostics and occupation-pattern analyses.

A Peres lattice plots <E_n| a'a |E_n> against E_n/J for every eigenstate.
In the regular part of the spectrum the points organize into interleaved
*bands*, each following its own linear trend; in the chaotic part the cloud
is structureless.  This module detects the bands, fits their lines, turns
point-to-trend distances into a windowed chaos profile d(E), and analyzes
post-quench occupation series (alternation, Fourier peaks, autocorrelation).

Quasi-degenerate parity doublets below the critical energy appear as
coincident lattice points / occupation entries.  Analyses that rely on the
one-entry-per-level interleaving therefore first collapse groups of levels
closer than ``degeneracy_gap`` (in E/J units): lattice points merge by
averaging, occupations merge by summing.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidParamsError
from .model import ModelParams
from .quench import QuenchResult
from .spectral import SpectralData

DEGENERACY_GAP_OVER_J = 1e-3

LOG_OCCUPATION_FLOOR = 1e-30

PEAK_THRESHOLD_FACTOR = 5.0

DEFAULT_WINDOW = 100

_MAX_BANDS = 12


@dataclass
class PeresLattice:
    """Per-eigenstate (E_n/J, <a'a>_n) points, ascending in energy."""

    energies_over_j: np.ndarray
    n_expectations: np.ndarray
    params: ModelParams

    def __len__(self) -> int:
        return len(self.energies_over_j)

    def restrict(self, e_min: float = -np.inf, e_max: float = np.inf) -> "PeresLattice":
        """Sub-lattice with E/J inside [e_min, e_max] (analysis windows)."""
        mask = (self.energies_over_j >= e_min) & (self.energies_over_j <= e_max)
        return PeresLattice(self.energies_over_j[mask], self.n_expectations[mask], self.params)


def peres_lattice(spec: SpectralData) -> PeresLattice:
    """Photon-number lattice of a spectral decomposition."""
    j = spec.params.n_atoms / 2.0
    return PeresLattice(spec.eigenvalues / j, spec.number_expectations(), spec.params)


def degenerate_groups(energies: np.ndarray, gap: float = DEGENERACY_GAP_OVER_J) -> list[np.ndarray]:
    """Runs of consecutive (sorted) energies separated by less than ``gap``."""
    if len(energies) == 0:
        return []
    breaks = np.flatnonzero(np.diff(energies) >= gap) + 1
    return np.split(np.arange(len(energies)), breaks)


def collapse_levels(
    energies: np.ndarray,
    values: np.ndarray,
    gap: float = DEGENERACY_GAP_OVER_J,
    mode: str = "sum",
) -> tuple[np.ndarray, np.ndarray, list[np.ndarray]]:
    """Merge quasi-degenerate levels: mean energy, summed or averaged values.

    Returns (merged energies, merged values, member-index groups).
    ``mode='sum'`` suits occupation probabilities, ``'mean'`` lattice points.
    """
    if mode not in ("sum", "mean"):
        raise InvalidParamsError(f"mode must be 'sum' or 'mean', got {mode!r}")
    groups = degenerate_groups(energies, gap)
    e = np.array([energies[g].mean() for g in groups])
    if mode == "sum":
        v = np.array([values[g].sum() for g in groups])
    else:
        v = np.array([values[g].mean() for g in groups])
    return e, v, groups


# ---------------------------------------------------------------------------
# band detection and linear fits
# ---------------------------------------------------------------------------


@dataclass
class Band:
    """One linear band: y = slope * (E/J) + intercept over its members."""

    slope: float
    intercept: float
    member_indices: np.ndarray
    start_energy_over_j: float

    def line(self, e_over_j: np.ndarray) -> np.ndarray:
        return self.slope * e_over_j + self.intercept


@dataclass
class BandModel:
    """Fitted band structure of the regular region of a Peres lattice.

    ``member_indices`` refer to positions in the lattice the fit was given.
    Points inside the fit region that ended up in a dropped (too small) band
    are listed in ``unassigned_indices`` rather than silently discarded.
    """

    bands: list[Band]
    fit_region_max_energy: float
    unassigned_indices: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=int))


def _fit_line(e: np.ndarray, y: np.ndarray) -> tuple[float, float]:
    """Least-squares line; constant data stays exactly constant."""
    if len(e) == 1 or np.ptp(e) == 0.0 or np.ptp(y) == 0.0:
        return 0.0, float(np.mean(y))
    a, b = np.polyfit(e, y, 1)
    return float(a), float(b)


def _line_distances(e: float, y: float, lines: list[tuple[float, float]]) -> np.ndarray:
    return np.array([abs(y - (a * e + b)) for a, b in lines])


def fit_bands(
    lat: PeresLattice,
    region_max_e_over_j: float,
    spawn_factor: float = PEAK_THRESHOLD_FACTOR,
    spawn_min_fraction: float = 0.02,
    min_band_points: int = 3,
    max_iter: int = 20,
) -> BandModel:
    """Detect interleaved linear bands below ``region_max_e_over_j``.

    Strategy: scan the points upward in energy, assigning each to the
    nearest existing band line; a point whose distance to every line exceeds
    ``spawn_factor`` times the running median residual opens a new band
    (this is where the band count increments and a start energy is
    recorded).  Membership is then polished by alternating nearest-line
    reassignment and refits until stable.  Coincident parity doublets simply
    land on the same line, so no degeneracy handling is needed here.

    ``spawn_min_fraction`` sets an absolute spawn gap as a fraction of the
    lattice's vertical span; it keeps fit noise on a freshly opened (still
    overfitted) line from spawning phantom bands.
    """
    mask = lat.energies_over_j <= region_max_e_over_j
    region_idx = np.flatnonzero(mask)
    if len(region_idx) < 2:
        raise InvalidParamsError("band-fit region must contain at least 2 lattice points")
    e_pts = lat.energies_over_j[region_idx]
    y_pts = lat.n_expectations[region_idx]

    # incremental scan with outlier-spawned bands
    assignment = np.zeros(len(e_pts), dtype=int)
    members: list[list[int]] = [[0]]
    lines: list[tuple[float, float]] = [(0.0, y_pts[0])]
    residuals: list[float] = []
    floor = 1e-12 * (1.0 + float(np.max(np.abs(y_pts))))
    min_gap = max(spawn_min_fraction * float(np.ptp(y_pts)), floor)
    for i in range(1, len(e_pts)):
        dists = _line_distances(e_pts[i], y_pts[i], lines)
        b = int(np.argmin(dists))
        med = np.median(residuals) if residuals else 0.0
        threshold = max(spawn_factor * med, min_gap)
        if dists[b] > threshold and len(lines) < _MAX_BANDS:
            lines.append((0.0, y_pts[i]))
            members.append([i])
            assignment[i] = len(lines) - 1
        else:
            assignment[i] = b
            members[b].append(i)
            residuals.append(float(dists[b]))
            idx = np.array(members[b])
            lines[b] = _fit_line(e_pts[idx], y_pts[idx])

    # polish: nearest-line reassignment + refit until stable
    for _ in range(max_iter):
        dist_matrix = np.abs(
            y_pts[:, None] - (e_pts[:, None] * np.array([a for a, _ in lines])[None, :]
                              + np.array([b for _, b in lines])[None, :])
        )
        new_assignment = np.argmin(dist_matrix, axis=1)
        if np.array_equal(new_assignment, assignment):
            break
        assignment = new_assignment
        for b in range(len(lines)):
            idx = np.flatnonzero(assignment == b)
            if len(idx):
                lines[b] = _fit_line(e_pts[idx], y_pts[idx])

    bands = []
    unassigned: list[int] = []
    for b, (a, c) in enumerate(lines):
        idx = np.flatnonzero(assignment == b)
        lattice_members = region_idx[idx]
        if len(idx) < min_band_points:
            warnings.warn(f"dropping band with {len(idx)} point(s) below the {min_band_points}-point minimum")
            unassigned.extend(lattice_members.tolist())
            continue
        bands.append(
            Band(a, c, np.sort(lattice_members), float(np.min(e_pts[idx])))
        )
    bands.sort(key=lambda band: band.start_energy_over_j)
    return BandModel(bands, float(region_max_e_over_j), np.array(sorted(unassigned), dtype=int))


# ---------------------------------------------------------------------------
# windowed distance-to-trend profile
# ---------------------------------------------------------------------------


@dataclass
class ChaosProfile:
    """Block-averaged distance of lattice points to their closest band line."""

    window_size: int
    centers: np.ndarray
    d_values: np.ndarray


def point_distances(lat: PeresLattice, bands: BandModel) -> np.ndarray:
    """Distance of every lattice point to the closest fitted band line."""
    if not bands.bands:
        raise InvalidParamsError("band model holds no bands")
    e = lat.energies_over_j
    stack = np.stack([np.abs(lat.n_expectations - band.line(e)) for band in bands.bands])
    return stack.min(axis=0)


def chaos_profile(lat: PeresLattice, bands: BandModel, window: int = DEFAULT_WINDOW) -> ChaosProfile:
    """Average point-to-trend distances over blocks of ``window`` consecutive states.

    Blocks are non-overlapping in energy order; a trailing partial block is
    discarded so every average has the same sample count.
    """
    if window < 2:
        raise InvalidParamsError("window must be at least 2")
    d = point_distances(lat, bands)
    n_blocks = len(d) // window
    if n_blocks == 0:
        raise InvalidParamsError("window larger than the lattice")
    d_blocks = d[: n_blocks * window].reshape(n_blocks, window).mean(axis=1)
    centers = lat.energies_over_j[: n_blocks * window].reshape(n_blocks, window).mean(axis=1)
    return ChaosProfile(window, centers, d_blocks)


# ---------------------------------------------------------------------------
# occupation-series analyses
# ---------------------------------------------------------------------------


def log_occupation_series(result: QuenchResult, floor: float = LOG_OCCUPATION_FLOOR) -> np.ndarray:
    """x_n = log10 P(E_n) with occupations clamped at ``floor`` before the log."""
    return np.log10(np.maximum(result.occupations, floor))


def alternation_ratio(occupations: np.ndarray) -> float:
    """Even/odd-position weight ratio of an occupation subsequence (>= 1).

    Large values signal the band selection rule where only every second
    level is populated.
    """
    if len(occupations) < 4:
        raise InvalidParamsError("need at least 4 entries to measure alternation")
    even = float(np.sum(occupations[0::2]))
    odd = float(np.sum(occupations[1::2]))
    if even == 0.0 and odd == 0.0:
        return 1.0
    if min(even, odd) == 0.0:
        return np.inf
    return max(even / odd, odd / even)


def series_autocorrelation(x: np.ndarray, lag: int = 1) -> float:
    """Pearson autocorrelation of a series at the given lag."""
    x = np.asarray(x, dtype=float)
    if len(x) <= lag + 1:
        raise InvalidParamsError("series too short for requested lag")
    a, b = x[:-lag], x[lag:]
    sa, sb = a.std(), b.std()
    if sa == 0.0 or sb == 0.0:
        return 0.0
    return float(np.mean((a - a.mean()) * (b - b.mean())) / (sa * sb))


@dataclass
class FourierRegion:
    """|FFT|^2 of one log-occupation subsequence plus its dominant-peak count."""

    label: str
    window: tuple[float, float]
    power: np.ndarray
    dominant_peak_count: int


@dataclass
class FourierReport:
    regions: list[FourierRegion]


def count_dominant_peaks(power: np.ndarray, threshold_factor: float = PEAK_THRESHOLD_FACTOR) -> int:
    """Local maxima (cyclic, plateaus counted once) above threshold_factor * median."""
    length = len(power)
    threshold = threshold_factor * float(np.median(power))
    left = np.roll(power, 1)
    right = np.roll(power, -1)
    is_peak = (power >= left) & (power >= right) & (power > threshold)
    count = 0
    k = 0
    while k < length:
        if is_peak[k]:
            run = k
            while run + 1 < length and is_peak[run + 1] and power[run + 1] == power[k]:
                run += 1
            count += 1
            k = run + 1
        else:
            k += 1
    # a plateau wrapping around the origin was counted twice
    if count > 1 and is_peak[0] and is_peak[-1] and power[0] == power[-1]:
        count -= 1
    return count


def band_fourier(
    series: np.ndarray,
    regions: list[tuple[str, tuple[float, float]]],
    energies: np.ndarray,
    threshold_factor: float = PEAK_THRESHOLD_FACTOR,
) -> FourierReport:
    """Discrete Fourier analysis of subsequences selected by energy windows.

    The subsequence mean is deliberately kept (the k=0 peak is part of the
    signature).  Windows with fewer than 8 points are skipped with a warning.
    """
    if len(series) != len(energies):
        raise InvalidParamsError("series and energies must have equal length")
    out = []
    for label, (lo, hi) in regions:
        mask = (energies >= lo) & (energies <= hi)
        sub = series[mask]
        if len(sub) < 8:
            warnings.warn(f"skipping Fourier region {label!r}: only {len(sub)} points")
            continue
        power = np.abs(np.fft.fft(sub)) ** 2
        out.append(FourierRegion(label, (lo, hi), power, count_dominant_peaks(power, threshold_factor)))
    return FourierReport(out)

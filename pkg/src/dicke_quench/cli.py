"""Command-line driver for quench experiments and figure-data reproduction.

Configuration is a flat ``section.key=value`` text file; command-line flags
override file values.  Every run writes its outputs plus a metadata sidecar
(the fully resolved configuration) and a run manifest listing each output
file with its CRC32, so identical configurations reproduce byte-identical
artifacts.

Exit codes: 0 success, 1 usage error, 2 numerical failure, 3 I/O error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import threading
import zlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, asdict

import numpy as np

from . import chaos, entanglement, meanfield, quench, spectral, states
from .errors import (
    CapacityError,
    CutoffTooSmallError,
    DickeError,
    InvalidParamsError,
    NumericalFailureError,
    PairingError,
)
from .model import ModelParams
from .quench import QuenchSpec, SweepRecord, format_float, run_quench, write_sweep_csv

DEFAULT_OMEGA = 1.0
DEFAULT_OMEGA0 = 1.0
DEFAULT_WINDOW = 100
DEFAULT_FIT_REGION_MAX = -4.0
DEFAULT_TIME_POINTS = 1024
DEFAULT_TIME_SPAN = 200.0

# spectra above this dense size are recomputed rather than stored on disk
DEFAULT_CACHE_MAX_MB = 256

COMMANDS = ("spectrum", "quench", "sweep", "peres", "fourier", "entropy-time", "reproduce-figure")


class UsageError(InvalidParamsError):
    """Bad flags, config keys, or values; exits with status 1."""


@dataclass
class RunConfig:
    """Fully resolved run description (model + quench + analysis + io)."""

    command: str
    n_atoms: int = 0
    omega: float = DEFAULT_OMEGA
    omega0: float = DEFAULT_OMEGA0
    n_max: int | None = None
    lambda_i: list[float] = field(default_factory=list)
    lambda_f: list[float] = field(default_factory=list)
    alpha: complex = 1.0 + 0.0j
    beta: complex = 0.0 + 0.0j
    window: int = DEFAULT_WINDOW
    fit_region_max: float = DEFAULT_FIT_REGION_MAX
    fft_regions: list[tuple[str, tuple[float, float]]] = field(default_factory=list)
    t_points: int = DEFAULT_TIME_POINTS
    t_span: float = DEFAULT_TIME_SPAN
    certify: bool = True
    output_dir: str = "runs"
    cache_dir: str | None = None
    cache_max_mb: int = DEFAULT_CACHE_MAX_MB
    overwrite: bool = False
    workers: int = 0  # 0 -> cpu count
    figure: str = ""
    lambda_i_is_delta: bool = False  # presets give quench sizes relative to each lambda_f

    def model_at(self, coupling: float) -> ModelParams:
        if self.n_atoms < 1:
            raise UsageError("model.n_atoms is required")
        if self.n_max is None:
            raise UsageError("model.n_max is required (or derivable; see default cutoff)")
        return ModelParams(self.n_atoms, self.omega, self.omega0, coupling, self.n_max)


def _parse_float_list(text: str, key: str) -> list[float]:
    """Accept 'a,b,c' lists or 'start:stop:step' inclusive ranges."""
    text = text.strip()
    try:
        if ":" in text:
            parts = [float(p) for p in text.split(":")]
            if len(parts) != 3 or parts[2] <= 0:
                raise ValueError
            start, stop, step = parts
            count = int(round((stop - start) / step))
            vals = [start + k * step for k in range(count + 1)]
            return [v for v in vals if v <= stop + 1e-12]
        return [float(p) for p in text.split(",") if p.strip()]
    except ValueError as exc:
        raise UsageError(f"non-numeric value for {key}: {text!r}") from exc


def _parse_regions(text: str) -> list[tuple[str, tuple[float, float]]]:
    regions = []
    for part in text.split(";"):
        part = part.strip()
        if not part:
            continue
        bits = part.split(":")
        if len(bits) != 3:
            raise UsageError(f"bad fft region {part!r}, expected label:lo:hi")
        try:
            regions.append((bits[0], (float(bits[1]), float(bits[2]))))
        except ValueError as exc:
            raise UsageError(f"non-numeric bound in fft region {part!r}") from exc
    return regions


_CONFIG_PARSERS = {
    "model.n_atoms": ("n_atoms", lambda v, k: int(v)),
    "model.omega": ("omega", lambda v, k: float(v)),
    "model.omega0": ("omega0", lambda v, k: float(v)),
    "model.n_max": ("n_max", lambda v, k: int(v)),
    "quench.lambda_i": ("lambda_i", _parse_float_list),
    "quench.lambda_f": ("lambda_f", _parse_float_list),
    "quench.alpha": ("alpha", lambda v, k: complex(v)),
    "quench.beta": ("beta", lambda v, k: complex(v)),
    "analysis.window": ("window", lambda v, k: int(v)),
    "analysis.fit_region_max": ("fit_region_max", lambda v, k: float(v)),
    "analysis.fft_regions": ("fft_regions", lambda v, k: _parse_regions(v)),
    "analysis.t_points": ("t_points", lambda v, k: int(v)),
    "analysis.t_span": ("t_span", lambda v, k: float(v)),
    "analysis.certify": ("certify", lambda v, k: v.lower() in ("1", "true", "yes")),
    "io.output_dir": ("output_dir", lambda v, k: v),
    "io.cache_dir": ("cache_dir", lambda v, k: v),
    "io.cache_max_mb": ("cache_max_mb", lambda v, k: int(v)),
    "io.overwrite": ("overwrite", lambda v, k: v.lower() in ("1", "true", "yes")),
    "io.workers": ("workers", lambda v, k: int(v)),
}


def _apply_config_file(cfg: RunConfig, path: str) -> None:
    try:
        with open(path) as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise UsageError(f"cannot read config file {path}: {exc}") from exc
    for ln, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{ln}: expected key=value, got {raw.strip()!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in _CONFIG_PARSERS:
            raise UsageError(f"{path}:{ln}: unknown config key {key!r}")
        attr, parser = _CONFIG_PARSERS[key]
        try:
            setattr(cfg, attr, parser(value, key))
        except UsageError:
            raise
        except (ValueError, TypeError) as exc:
            raise UsageError(f"{path}:{ln}: bad value for {key}: {value!r}") from exc


class _ArgumentParser(argparse.ArgumentParser):
    def error(self, message):  # argparse defaults to exit code 2; usage errors are ours
        raise UsageError(message)


def _build_parser() -> argparse.ArgumentParser:
    ap = _ArgumentParser(
        prog="dicke-quench",
        description="Exact Dicke-model quench simulations: spectra, entropies, heat, chaos metrics.",
    )
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("figure", nargs="?", default="", help="preset name for reproduce-figure")
    ap.add_argument("--config", help="key=value config file")
    ap.add_argument("--n-atoms", type=int)
    ap.add_argument("--omega", type=float)
    ap.add_argument("--omega0", type=float)
    ap.add_argument("--n-max", type=int)
    ap.add_argument("--lambda-i")
    ap.add_argument("--lambda-f")
    ap.add_argument("--alpha")
    ap.add_argument("--beta")
    ap.add_argument("--window", type=int)
    ap.add_argument("--fit-region-max", type=float)
    ap.add_argument("--fft-regions")
    ap.add_argument("--t-points", type=int)
    ap.add_argument("--t-span", type=float)
    ap.add_argument("--no-certify", action="store_true")
    ap.add_argument("--output-dir")
    ap.add_argument("--cache-dir")
    ap.add_argument("--cache-max-mb", type=int)
    ap.add_argument("--overwrite", action="store_true")
    ap.add_argument("--workers", type=int)
    return ap


def parse_config(argv: list[str]) -> RunConfig:
    """Resolve a RunConfig from argv: file values first, flags override."""
    ns = _build_parser().parse_args(argv)
    cfg = RunConfig(command=ns.command)
    if ns.config:
        _apply_config_file(cfg, ns.config)
    if ns.n_atoms is not None:
        cfg.n_atoms = ns.n_atoms
    if ns.omega is not None:
        cfg.omega = ns.omega
    if ns.omega0 is not None:
        cfg.omega0 = ns.omega0
    if ns.n_max is not None:
        cfg.n_max = ns.n_max
    if ns.lambda_i is not None:
        cfg.lambda_i = _parse_float_list(ns.lambda_i, "--lambda-i")
    if ns.lambda_f is not None:
        cfg.lambda_f = _parse_float_list(ns.lambda_f, "--lambda-f")
    if ns.alpha is not None:
        try:
            cfg.alpha = complex(ns.alpha)
        except ValueError as exc:
            raise UsageError(f"bad --alpha {ns.alpha!r}") from exc
    if ns.beta is not None:
        try:
            cfg.beta = complex(ns.beta)
        except ValueError as exc:
            raise UsageError(f"bad --beta {ns.beta!r}") from exc
    if ns.window is not None:
        cfg.window = ns.window
    if ns.fit_region_max is not None:
        cfg.fit_region_max = ns.fit_region_max
    if ns.fft_regions is not None:
        cfg.fft_regions = _parse_regions(ns.fft_regions)
    if ns.t_points is not None:
        cfg.t_points = ns.t_points
    if ns.t_span is not None:
        cfg.t_span = ns.t_span
    if ns.no_certify:
        cfg.certify = False
    if ns.output_dir is not None:
        cfg.output_dir = ns.output_dir
    if ns.cache_dir is not None:
        cfg.cache_dir = ns.cache_dir
    if ns.cache_max_mb is not None:
        cfg.cache_max_mb = ns.cache_max_mb
    if ns.overwrite:
        cfg.overwrite = True
    if ns.workers is not None:
        cfg.workers = ns.workers
    cfg.figure = ns.figure
    if cfg.command == "reproduce-figure":
        if not cfg.figure:
            raise UsageError("reproduce-figure needs a preset name (fig1..fig7)")
        _apply_figure_preset(cfg)
    elif cfg.figure:
        raise UsageError(f"unexpected positional argument {cfg.figure!r}")
    _validate(cfg)
    return cfg


def _validate(cfg: RunConfig) -> None:
    needs_li = cfg.command in ("quench", "sweep", "fourier", "entropy-time")
    needs_lf = needs_li or cfg.command in ("spectrum", "peres")
    if needs_lf and not cfg.lambda_f:
        raise UsageError(f"{cfg.command} needs quench.lambda_f (non-empty grid)")
    if needs_li and not cfg.lambda_i:
        raise UsageError(f"{cfg.command} needs quench.lambda_i (non-empty grid)")
    if cfg.window < 2:
        raise UsageError("analysis.window must be >= 2")
    if cfg.n_atoms < 1:
        raise UsageError("model.n_atoms is required")
    if cfg.n_max is None:
        lam_max = max(cfg.lambda_f + cfg.lambda_i, default=0.0)
        cfg.n_max = spectral.default_photon_cutoff(cfg.n_atoms, lam_max, cfg.omega)


# ---------------------------------------------------------------------------
# figure presets
# ---------------------------------------------------------------------------


def _apply_figure_preset(cfg: RunConfig) -> None:
    """Expand a bundled experiment preset; explicit flags still override later."""
    name = cfg.figure
    grid_dl = [round(0.1 * k, 10) for k in range(1, 16)]  # quench sizes 0.1..1.5
    if name in ("fig1", "fig2"):
        cfg.command = "sweep"
        cfg.n_atoms = cfg.n_atoms or 30
        cfg.lambda_f = cfg.lambda_f or [0.9, 1.2, 1.5, 2.0, 2.5, 3.0]
        if not cfg.lambda_i:
            cfg.lambda_i = grid_dl
            cfg.lambda_i_is_delta = True
    elif name == "fig3":
        cfg.command = "peres"
        cfg.n_atoms = cfg.n_atoms or 30
        cfg.lambda_f = cfg.lambda_f or [2.5]
        cfg.fit_region_max = -9.0 if cfg.fit_region_max == DEFAULT_FIT_REGION_MAX else cfg.fit_region_max
    elif name == "fig4":
        cfg.command = "peres"
        cfg.n_atoms = cfg.n_atoms or 30
        cfg.lambda_f = cfg.lambda_f or [2.5]
        cfg.fit_region_max = -9.0 if cfg.fit_region_max == DEFAULT_FIT_REGION_MAX else cfg.fit_region_max
        cfg.window = cfg.window or DEFAULT_WINDOW
    elif name == "fig5":
        cfg.command = "fourier"
        cfg.n_atoms = cfg.n_atoms or 30
        cfg.lambda_f = cfg.lambda_f or [2.5]
        cfg.lambda_i = cfg.lambda_i or [4.0]
        cfg.fft_regions = cfg.fft_regions or [
            ("one_band", (-12.5, -10.9)),
            ("two_bands", (-10.9, -9.4)),
            ("four_bands", (-8.0, -6.7)),
            ("six_bands", (-5.6, -4.5)),
            ("eight_bands", (-3.6, -2.7)),
            ("ten_bands", (-2.0, -1.0)),
            ("above_critical", (-1.0, 1.0)),
        ]
    elif name == "fig6":
        cfg.command = "sweep"
        cfg.n_atoms = cfg.n_atoms or 20
        cfg.lambda_f = cfg.lambda_f or [1.2, 1.5, 2.0, 2.5, 3.0]
        if not cfg.lambda_i:
            cfg.lambda_i = [round(0.15 * k, 10) for k in range(1, 22)]
            cfg.lambda_i_is_delta = True
    elif name == "fig7":
        cfg.command = "entropy-time"
        cfg.n_atoms = cfg.n_atoms or 20
        cfg.lambda_f = cfg.lambda_f or [2.5]
        cfg.lambda_i = cfg.lambda_i or [3.0, 4.0, 4.7, 4.9, 5.5, 7.0]
    else:
        raise UsageError(f"unknown figure preset {name!r} (expected fig1..fig7)")


# ---------------------------------------------------------------------------
# cached diagonalization with hit counters
# ---------------------------------------------------------------------------


@dataclass
class CacheCounters:
    lookups: int = 0
    hits: int = 0
    diagonalizations: int = 0


class SpectraSource:
    """Spectra provider: disk cache + in-flight deduplication per parameter key.

    Stores results through the atomic cache path only; oversized spectra are
    recomputed instead of cached (size guard in MB of dense eigenvectors).
    """

    def __init__(self, cache_dir: str | None, max_mb: int = DEFAULT_CACHE_MAX_MB):
        self.cache_dir = cache_dir
        self.max_mb = max_mb
        self.counters = CacheCounters()
        self._lock = threading.Lock()
        self._pending: dict[str, threading.Event] = {}
        self._results: dict[str, spectral.SpectralData] = {}

    def get(self, p: ModelParams) -> spectral.SpectralData:
        key = spectral.cache_key(p)
        with self._lock:
            self.counters.lookups += 1
            if key in self._results:
                self.counters.hits += 1
                return self._results[key]
            if self.cache_dir is not None:
                cached = spectral.cache_lookup(self.cache_dir, p)
                if cached is not None:
                    self.counters.hits += 1
                    self._results[key] = cached
                    return cached
            if key in self._pending:
                event = self._pending[key]
                wait = True
            else:
                event = self._pending[key] = threading.Event()
                wait = False
        if wait:
            event.wait()
            with self._lock:
                self.counters.hits += 1
                return self._results[key]
        try:
            spec = spectral.diagonalize(p)
            with self._lock:
                self.counters.diagonalizations += 1
                self._results[key] = spec
            if self.cache_dir is not None and self._estimated_mb(p) <= self.max_mb:
                spectral.cache_store(self.cache_dir, spec)
        finally:
            event.set()
            with self._lock:
                self._pending.pop(key, None)
        return spec

    @staticmethod
    def _estimated_mb(p: ModelParams) -> float:
        return p.dimension * p.dimension * 8 / 1e6


# ---------------------------------------------------------------------------
# output management
# ---------------------------------------------------------------------------


class RunWriter:
    """Collects output files, then writes the CRC32 manifest last.

    On failure every partial output is removed so a directory never holds an
    artifact that is not covered by a manifest.
    """

    def __init__(self, output_dir: str, overwrite: bool):
        self.output_dir = output_dir
        self.overwrite = overwrite
        self.files: list[str] = []

    def path(self, name: str) -> str:
        os.makedirs(self.output_dir, exist_ok=True)
        full = os.path.join(self.output_dir, name)
        if os.path.exists(full) and not self.overwrite:
            raise UsageError(f"output file exists (use --overwrite): {full}")
        self.files.append(full)
        return full

    def write_text(self, name: str, text: str) -> str:
        full = self.path(name)
        with open(full, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        return full

    def finalize(self) -> str:
        lines = ["filename,bytes,crc32"]
        for full in sorted(self.files):
            with open(full, "rb") as fh:
                data = fh.read()
            crc = zlib.crc32(data) & 0xFFFFFFFF
            lines.append(f"{os.path.basename(full)},{len(data)},{crc:08x}")
        manifest = os.path.join(self.output_dir, "run-manifest.txt")
        with open(manifest, "w", encoding="utf-8", newline="\n") as fh:
            fh.write("\n".join(lines) + "\n")
        return manifest

    def cleanup(self) -> None:
        for full in self.files:
            if os.path.exists(full):
                os.unlink(full)


def _config_sidecar(cfg: RunConfig, extra: dict | None = None) -> str:
    payload = {"config": _jsonable(asdict(cfg))}
    if extra:
        payload.update(extra)
    return json.dumps(payload, indent=2, sort_keys=True, default=str) + "\n"


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    return obj


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def _csv(header: str, rows) -> str:
    out = [header]
    for row in rows:
        out.append(",".join(format_float(v) if isinstance(v, float) else str(v) for v in row))
    return "\n".join(out) + "\n"


def _cmd_spectrum(cfg: RunConfig, writer: RunWriter, source: SpectraSource) -> dict:
    p = cfg.model_at(cfg.lambda_f[0])
    spec = source.get(p)
    rows = [(k, float(spec.eigenvalues[k]), int(spec.parities[k])) for k in range(spec.size)]
    writer.write_text("spectrum.csv", _csv("index,energy,parity", rows))
    extra = {}
    if cfg.certify:
        gs = states.StateVector(p, spec.eigenvector(0).astype(np.complex128))
        report = spectral.certify_cutoff(p, gs.amplitudes, tol=1e-8)
        extra["certification"] = vars(report)
    return extra


def _quench_pair(cfg: RunConfig, source: SpectraSource, lambda_i: float, lambda_f: float):
    spec_f = source.get(cfg.model_at(lambda_f))
    q = QuenchSpec(cfg.n_atoms, cfg.omega, cfg.omega0, lambda_i, lambda_f, cfg.n_max, cfg.alpha, cfg.beta)
    return q, spec_f, run_quench(q, spec_f)


def _cmd_quench(cfg: RunConfig, writer: RunWriter, source: SpectraSource) -> dict:
    q, spec_f, res = _quench_pair(cfg, source, cfg.lambda_i[0], cfg.lambda_f[0])
    series = quench.energy_distribution_series(res)
    writer.write_text(
        "distribution.csv", _csv("E_over_J,P", [(float(e), float(p)) for e, p in series])
    )
    s_eq = entanglement.diagonal_ensemble_entropy(spec_f, res.occupations)
    summary = {
        "S_d": res.s_diag,
        "Q": res.heat,
        "deltaE": res.delta_e,
        "W_reversible": res.work_reversible,
        "E95_over_J": res.e95_over_j,
        "mean_final_energy_over_J": res.mean_final_energy_over_j,
        "S_ent_equilibrium": s_eq,
    }
    extra = {"summary": summary}
    if cfg.certify:
        st = states.coherent_ground_state(q.params_i(), cfg.alpha, cfg.beta)
        extra["certification"] = {
            "initial_top_shell_weight": spectral.shell_tail_weight(q.params_i(), st.amplitudes),
            "occupation_completeness": float(res.occupations.sum()),
        }
    return extra


def _sweep_lambda_is(cfg: RunConfig, lambda_f: float) -> list[float]:
    """Preset grids give quench sizes relative to lambda_f; others are absolute."""
    if cfg.lambda_i_is_delta:
        return [round(lambda_f + dl, 12) for dl in cfg.lambda_i]
    return cfg.lambda_i


def _cmd_sweep(cfg: RunConfig, writer: RunWriter, source: SpectraSource) -> dict:
    jobs = [(lf, li) for lf in cfg.lambda_f for li in _sweep_lambda_is(cfg, lf)]

    def run_one(pair):
        lf, li = pair
        q, spec_f, res = _quench_pair(cfg, source, li, lf)
        s_eq = entanglement.diagonal_ensemble_entropy(spec_f, res.occupations)
        try:
            q_mf = meanfield.heat_general(li, lf, cfg.omega, cfg.omega0)
        except meanfield.DomainError:
            q_mf = float("nan")
        j = cfg.n_atoms / 2.0
        return SweepRecord(li, lf, li - lf, res.delta_e / j, res.heat / j,
                           res.s_diag, res.e95_over_j, s_eq, q_mf)

    workers = cfg.workers or (os.cpu_count() or 1)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(run_one, jobs))
    else:
        records = [run_one(j) for j in jobs]
    records.sort(key=lambda r: (r.lambda_f, r.lambda_i))
    path = writer.path("sweep.csv")
    write_sweep_csv(path, records)
    return {"jobs": len(jobs), "cache": vars(source.counters)}


def _cmd_peres(cfg: RunConfig, writer: RunWriter, source: SpectraSource) -> dict:
    spec = source.get(cfg.model_at(cfg.lambda_f[0]))
    lat = chaos.peres_lattice(spec)
    writer.write_text(
        "lattice.csv",
        _csv("E_over_J,n_expect", zip(map(float, lat.energies_over_j), map(float, lat.n_expectations))),
    )
    bands = chaos.fit_bands(lat, cfg.fit_region_max)
    lines = ["# band id, slope, intercept, start_energy_over_J, members"]
    for k, band in enumerate(bands.bands):
        lines.append(
            f"band {k}: slope={format_float(band.slope)} intercept={format_float(band.intercept)} "
            f"start={format_float(band.start_energy_over_j)} members={len(band.member_indices)}"
        )
    if len(bands.unassigned_indices):
        lines.append(f"unassigned: {' '.join(map(str, bands.unassigned_indices))}")
    writer.write_text("bands.txt", "\n".join(lines) + "\n")
    profile = chaos.chaos_profile(lat, bands, cfg.window)
    writer.write_text(
        "profile.csv",
        _csv("E_center_over_J,d", zip(map(float, profile.centers), map(float, profile.d_values))),
    )
    return {"bands": len(bands.bands)}


def _cmd_fourier(cfg: RunConfig, writer: RunWriter, source: SpectraSource) -> dict:
    _, _, res = _quench_pair(cfg, source, cfg.lambda_i[0], cfg.lambda_f[0])
    energies, occ, _ = chaos.collapse_levels(res.energies_over_j, res.occupations)
    series = np.log10(np.maximum(occ, chaos.LOG_OCCUPATION_FLOOR))
    writer.write_text(
        "log_occupations.csv", _csv("E_over_J,log10_P", zip(map(float, energies), map(float, series)))
    )
    regions = cfg.fft_regions or [("all", (float(energies[0]), float(energies[-1])))]
    report = chaos.band_fourier(series, regions, energies)
    rows = []
    peaks = {}
    for region in report.regions:
        peaks[region.label] = region.dominant_peak_count
        for k, power in enumerate(region.power):
            rows.append((region.label, k, float(power)))
    writer.write_text("fourier.csv", _csv("region_label,k,power", rows))
    return {"dominant_peaks": peaks}


def _cmd_entropy_time(cfg: RunConfig, writer: RunWriter, source: SpectraSource) -> dict:
    spec_f = source.get(cfg.model_at(cfg.lambda_f[0]))
    grid = np.linspace(0.0, cfg.t_span / cfg.omega, cfg.t_points)
    extra: dict = {"traces": {}}
    for li in cfg.lambda_i:
        q = QuenchSpec(cfg.n_atoms, cfg.omega, cfg.omega0, li, cfg.lambda_f[0], cfg.n_max, cfg.alpha, cfg.beta)
        trace = entanglement.entropy_timeseries(q, spec_f, grid)
        name = f"entropy_time_li_{li:g}.csv"
        writer.write_text(name, _csv("t,S_ent", zip(map(float, trace.times), map(float, trace.s_ent))))
        info = {
            "equilibrium_value": trace.equilibrium_value,
            "equilibrium_window": list(trace.equilibrium_window),
        }
        if cfg.certify:
            st = states.coherent_ground_state(q.params_i(), cfg.alpha, cfg.beta)
            report = spectral.certify_cutoff(q.params_i(), st.amplitudes, tol=1e-8)
            info["certification"] = vars(report)
        extra["traces"][f"{li:g}"] = info
    return extra


_RUNNERS = {
    "spectrum": _cmd_spectrum,
    "quench": _cmd_quench,
    "sweep": _cmd_sweep,
    "peres": _cmd_peres,
    "fourier": _cmd_fourier,
    "entropy-time": _cmd_entropy_time,
}


def run(cfg: RunConfig) -> int:
    """Execute a resolved RunConfig; returns the exit status."""
    writer = RunWriter(cfg.output_dir, cfg.overwrite)
    source = SpectraSource(cfg.cache_dir, cfg.cache_max_mb)
    try:
        extra = _RUNNERS[cfg.command](cfg, writer, source)
        writer.write_text("run_meta.json", _config_sidecar(cfg, extra))
        writer.finalize()
        return 0
    except Exception:
        writer.cleanup()
        raise


def main(argv: list[str] | None = None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    try:
        cfg = parse_config(argv)
        return run(cfg)
    except UsageError as exc:
        print(f"error(usage): {exc}", file=sys.stderr)
        return 1
    except (NumericalFailureError, CutoffTooSmallError, PairingError, CapacityError) as exc:
        print(f"error(numerical): {exc}", file=sys.stderr)
        return 2
    except InvalidParamsError as exc:
        print(f"error(usage): {exc}", file=sys.stderr)
        return 1
    except DickeError as exc:
        print(f"error(numerical): {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error(io): {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())

"""Stability experiments: orbital distance, the transform pipeline, sweeps.

A pipeline run removes the soliton from perturbed data with a Backlund
transformation, evolves the small remainder together with its Jost matrix,
and puts the soliton back at each sample time. An independent direct
evolution of the original data serves as the control.
"""
from __future__ import annotations

import configparser
import csv
import json
import math
import time
from collections import deque
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import NamedTuple

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from .backlund import bt_down, bt_up, match_coefficients, predict_modulation, wrap_phase
from .errors import InvariantViolation, PipelineError
from .evolve import EvolverConfig, conserved, trajectory
from .field import Grid, GridField, ddx, inner, l2_norm
from .jost import boundary_values, jost_evolve, jost_initial
from .lax import zero_curvature_residual
from .soliton import SolitonParams, SpectralParam, soliton_family, soliton_values
from .spectral import find_eigenvalue


class OrbitalFit(NamedTuple):
    d: float
    a: float
    b: float


def orbital_distance(q: GridField, z1: SpectralParam, t: float) -> OrbitalFit:
    """min over (a, b) of ||q - e^{ib} psi^{z1}(t, . + a)||.

    For fixed a the best phase is arg <q, psi_a>, so only |<q, psi_a>| is
    maximized over a: first over grid shifts (all at once by FFT
    cross-correlation), then by solving d/da |<q, psi_a>|^2 = 0 within one
    cell of the best shift.
    """
    g = q.grid
    x = g.x
    psi = soliton_values(z1.z, t, x)
    # corr[m] = h sum_n q_n conj(psi_{n+m}) for periodic index n + m
    corr = g.h * np.conj(np.fft.ifft(np.conj(np.fft.fft(q.values)) * np.fft.fft(psi)))
    shifts = np.fft.fftfreq(g.N, d=1.0 / g.N) * g.h  # m in [-N/2, N/2) times h
    mag = np.abs(corr)
    best = mag.max()
    if best == 0:
        return OrbitalFit(l2_norm(q - GridField(g, psi)), 0.0, 0.0)
    cand = np.flatnonzero(mag >= best * (1 - 1e-12))
    m = cand[np.argmin(np.abs(shifts[cand]))]
    a0 = shifts[m]

    def overlap(a: float) -> complex:
        return g.h * np.vdot(soliton_values(z1.z, t, x + a), q.values)

    def slope(a: float) -> float:
        # d/da |<q, psi_a>|^2 / 2, with d/da psi(x + a) = psi_x(x + a)
        psi_a = soliton_values(z1.z, t, x + a)
        c = g.h * np.vdot(psi_a, q.values)
        dc = g.h * np.vdot(ddx(psi_a, g), q.values)
        return float((np.conj(c) * dc).real)

    lo, hi = a0 - g.h, a0 + g.h
    if slope(lo) > 0 > slope(hi):
        a = brentq(slope, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps)
    else:
        res = minimize_scalar(lambda s: -abs(overlap(s)), bounds=(lo, hi),
                              method="bounded", options={"xatol": 1e-10})
        a = float(res.x) if -res.fun >= best else float(a0)
    c = overlap(a)
    b = wrap_phase(float(np.angle(c)))
    fam = np.exp(1j * b) * soliton_values(z1.z, t, x + a)
    d = float(np.sqrt(g.h * np.sum(np.abs(q.values - fam) ** 2)))
    return OrbitalFit(d, a, b)


# ----------------------------------------------------------------------------
# configuration

SHAPES = ("sech", "gaussian", "random")


@dataclass(frozen=True)
class ExperimentConfig:
    """One stability experiment. Field names double as config-file keys."""

    # [experiment]
    z0: complex = 1 + 0.5j
    T: float = 5.0
    sample_interval: float = 0.5
    # [perturbation]
    shape: str = "sech"
    epsilon: float = 1e-3
    seed: int = 0
    theta: float = 0.0  # global phase applied to the perturbed data
    # [grid]
    L: float = 300.0
    N: int = 8192
    # [evolver]
    dt: float = 1e-4
    dealias: bool = True
    # [spectral]
    eig_tol: float = 1e-12
    evans_refine: int = 16
    jost_refine: int = 2
    jost_stride: int = 5
    zc_spacing: int = 2
    # [tolerances]
    roundtrip_tol: float = 1e-7
    drift_tol: float = 1e-6
    zc_tol: float = 1e-4
    mismatch_tol: float = 1e-5
    jost_tol: float = 1e-6

    def __post_init__(self):
        if self.shape not in SHAPES:
            raise ValueError(f"shape must be one of {SHAPES}, got {self.shape!r}")
        if not self.epsilon >= 0:
            raise ValueError("epsilon must be nonnegative")
        SpectralParam(self.z0)  # rejects Im z0^2 == 0
        n_steps = self.n_steps
        if self.sample_steps * round(self.T / self.sample_interval) != n_steps:
            raise ValueError("T must be a multiple of sample_interval")
        if self.sample_steps % self.jost_stride:
            raise ValueError("sample_interval must be a multiple of jost_stride * dt")
        if self.zc_spacing < 2 or self.zc_spacing % 2:
            raise ValueError("zc_spacing must be an even number of steps >= 2")
        if n_steps < 2 * self.zc_spacing:
            raise ValueError("T too short for the zero-curvature stencil")

    @property
    def param(self) -> SpectralParam:
        return SpectralParam(self.z0)

    @property
    def grid(self) -> Grid:
        return Grid(self.L, self.N)

    @property
    def n_steps(self) -> int:
        return EvolverConfig(dt=self.dt, T=self.T).n_steps

    @property
    def sample_steps(self) -> int:
        k = int(round(self.sample_interval / self.dt))
        if k < 1 or abs(k * self.dt - self.sample_interval) > 1e-9:
            raise ValueError("sample_interval must be a multiple of dt")
        return k

    def evolver(self) -> EvolverConfig:
        return EvolverConfig(dt=self.dt, T=self.T, dealias=self.dealias,
                             store_every=self.sample_steps)


_SECTIONS = {
    "experiment": ("z0", "T", "sample_interval"),
    "perturbation": ("shape", "epsilon", "seed", "theta"),
    "grid": ("L", "N"),
    "evolver": ("dt", "dealias"),
    "spectral": ("eig_tol", "evans_refine", "jost_refine", "jost_stride", "zc_spacing"),
    "tolerances": ("roundtrip_tol", "drift_tol", "zc_tol", "mismatch_tol", "jost_tol"),
}


def _convert(name: str, raw: str):
    kind = {f.name: f.type for f in fields(ExperimentConfig)}[name]
    raw = raw.strip()
    if kind == "complex":
        return complex(raw.replace(" ", "").replace("i", "j"))
    if kind == "bool":
        low = raw.lower()
        if low in ("1", "true", "yes", "on"):
            return True
        if low in ("0", "false", "no", "off"):
            return False
        raise ValueError(f"{name}: not a boolean: {raw!r}")
    if kind == "int":
        return int(raw)
    if kind == "float":
        return float(raw)
    return raw


def _parse(text: str) -> configparser.ConfigParser:
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    cp.optionxform = str  # keys are case sensitive (L, N, T)
    cp.read_string(text)
    return cp


def config_from_parser(cp: configparser.ConfigParser,
                       base: ExperimentConfig | None = None) -> ExperimentConfig:
    values = {}
    for section in cp.sections():
        if section == "sweep":
            continue
        if section not in _SECTIONS:
            raise ValueError(f"unknown config section [{section}]")
        for key, raw in cp.items(section):
            if key not in _SECTIONS[section]:
                raise ValueError(f"unknown key {key!r} in section [{section}]")
            values[key] = _convert(key, raw)
    return replace(base or ExperimentConfig(), **values)


def load_config(path) -> ExperimentConfig:
    return config_from_parser(_parse(Path(path).read_text()))


def load_sweep(path) -> list[ExperimentConfig]:
    """Base experiment plus a [sweep] section listing comma-separated values.

    Recognized sweep keys: epsilons, seeds, shapes. Their product is expanded.
    """
    cp = _parse(Path(path).read_text())
    base = config_from_parser(cp)
    if not cp.has_section("sweep"):
        return [base]
    sw = dict(cp.items("sweep"))
    unknown = set(sw) - {"epsilons", "seeds", "shapes"}
    if unknown:
        raise ValueError(f"unknown sweep keys: {sorted(unknown)}")

    def split(key, conv, default):
        return [conv(v) for v in sw[key].split(",")] if key in sw else [default]

    out = []
    for shape in split("shapes", str.strip, base.shape):
        for seed in split("seeds", int, base.seed):
            for eps in split("epsilons", float, base.epsilon):
                out.append(replace(base, shape=shape, seed=seed, epsilon=eps))
    return out


def config_to_dict(cfg: ExperimentConfig) -> dict:
    d = asdict(cfg)
    d["z0"] = [cfg.z0.real, cfg.z0.imag]
    return d


# ----------------------------------------------------------------------------
# data

def perturbation(cfg: ExperimentConfig, grid: Grid) -> np.ndarray:
    """Smooth, exponentially localized perturbation with peak amplitude ~epsilon."""
    x = grid.x
    if cfg.shape == "sech":
        p = np.exp(1j * x) / np.cosh(x)
    elif cfg.shape == "gaussian":
        p = np.exp(1j * x - 0.5 * x**2)
    else:
        rng = np.random.default_rng(cfg.seed)
        k = rng.uniform(-3.0, 3.0, size=8)
        c = rng.normal(size=8) + 1j * rng.normal(size=8)
        p = (np.exp(1j * np.outer(x, k)) @ c) / np.cosh(x)
        p = p / np.abs(p).max()
    return cfg.epsilon * p


def initial_data(cfg: ExperimentConfig) -> GridField:
    g = cfg.grid
    base = soliton_values(cfg.param.z, 0.0, g.x) + perturbation(cfg, g)
    return GridField(g, np.exp(1j * cfg.theta) * base)


@dataclass
class SampleRow:
    t: float
    d: float
    a: float
    b: float
    M: float
    E: float
    P: float
    residual: float  # zero-curvature residual at slice spacing zc_spacing * dt
    residual_half: float  # same at half the spacing
    direct_mismatch: float  # ||q_direct - Q||
    d_direct: float
    q1_norm: float
    jost_deviation: float  # ||mu11 - e^{-2iz^4t}||_inf + ||mu12||_2, each column scaled
    jost_boundary: float
    jost_x_residual: float
    anchor_drift: float
    prediction_error: float  # ||Q - family at predicted shift and phase||


CSV_COLUMNS = ("t", "d", "a", "b", "M", "E", "P", "residual")


@dataclass
class StabilityRecord:
    config: dict
    z0: tuple[float, float]
    z1: tuple[float, float]
    z1_shift: float
    evans_residual: float
    q01_norm: float
    smallness_ratio: float | None
    roundtrip_error: float
    coefficients: tuple[float, float, float, float]
    fit_residual: float
    contraction_norm: float
    predicted_shift: float
    predicted_phase: float
    samples: list[SampleRow] = field(default_factory=list)
    violations: list[str] = field(default_factory=list)
    runtime: float = 0.0

    @property
    def epsilon(self) -> float:
        return float(self.config["epsilon"])

    @property
    def sup_distance(self) -> float:
        return max(s.d for s in self.samples)

    @property
    def ok(self) -> bool:
        return not self.violations

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(s, name) for s in self.samples])

    def conservation_drift(self) -> tuple[float, float, float]:
        s0 = self.samples[0]
        M, E, P = self.column("M"), self.column("E"), self.column("P")
        return (float(np.max(np.abs(M - s0.M)) / max(s0.M, 1e-300)),
                float(np.max(np.abs(E - s0.E)) / (abs(s0.E) + 1)),
                float(np.max(np.abs(P - s0.P)) / (abs(s0.P) + 1)))

    def to_dict(self) -> dict:
        d = asdict(self)
        d["sup_distance"] = self.sup_distance if self.samples else None
        d["ok"] = self.ok
        return d

    def to_json(self, path=None) -> str:
        text = json.dumps(self.to_dict(), indent=2)
        if path is not None:
            Path(path).write_text(text + "\n")
        return text

    def write_csv(self, path) -> None:
        with Path(path).open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(CSV_COLUMNS)
            for s in self.samples:
                w.writerow([repr(float(getattr(s, c))) for c in CSV_COLUMNS])

    @classmethod
    def from_dict(cls, d: dict) -> "StabilityRecord":
        d = dict(d)
        d.pop("sup_distance", None)
        d.pop("ok", None)
        d["samples"] = [SampleRow(**s) for s in d["samples"]]
        for key in ("z0", "z1", "coefficients"):
            d[key] = tuple(d[key])
        return cls(**d)


# ----------------------------------------------------------------------------
# pipeline

def _stage(name: str, fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except PipelineError:
        raise
    except Exception as exc:  # annotate and re-raise
        raise PipelineError(name, exc) from exc


def _direct_pass(q0: GridField, cfg: ExperimentConfig, z1: SpectralParam):
    """Evolve q0; return per-sample fields, conserved triples and residual pairs."""
    n, ks, zc = cfg.n_steps, cfg.sample_steps, cfg.zc_spacing
    dt = cfg.dt
    samples = list(range(0, n + 1, ks))
    centers = {j: min(max(j, zc), n - zc) for j in samples}
    stored: dict[int, GridField] = {}
    res: dict[int, tuple[float, float]] = {}
    buf: deque = deque(maxlen=2 * zc + 1)
    for j, (t, v) in enumerate(trajectory(q0, cfg.evolver(), every=1)):
        f = GridField(q0.grid, v)
        buf.append(f)
        if j in centers:
            stored[j] = f
        for s, c in centers.items():
            if c + zc == j:
                mid = len(buf) - 1 - zc
                full = [buf[mid - zc], buf[mid], buf[mid + zc]]
                half = [buf[mid - zc // 2], buf[mid], buf[mid + zc // 2]]
                res[s] = (zero_curvature_residual(full, z1, zc * dt),
                          zero_curvature_residual(half, z1, zc * dt / 2))
    return [(j * dt, stored[j], conserved(stored[j]), res[j]) for j in samples]


def run_pipeline(cfg: ExperimentConfig) -> StabilityRecord:
    """One full experiment; sub-module failures surface as PipelineError."""
    start = time.perf_counter()
    z0 = cfg.param
    q0 = initial_data(cfg)
    g = q0.grid
    eig = _stage("eigenvalue", find_eigenvalue, q0, z0, cfg.eig_tol, cfg.evans_refine)
    z1 = eig.z1
    down = _stage("bt_down", bt_down, q0, eig)
    mu0 = _stage("jost_initial", jost_initial, down.q1, z1, refine=cfg.jost_refine)
    fit = _stage("match_coefficients", match_coefficients, down.phi1, mu0.mu, z1)
    Q0 = _stage("bt_up", bt_up, down.q1, mu0.mu, fit.coeffs, z1)
    rt = l2_norm(Q0 - q0)
    if rt >= cfg.roundtrip_tol:
        raise PipelineError("roundtrip", InvariantViolation(
            f"||bt_up(bt_down(q0)) - q0|| = {rt:.3g} >= {cfg.roundtrip_tol:g}"))
    pred = predict_modulation(fit.coeffs, z1)
    rec = StabilityRecord(
        config=config_to_dict(cfg), z0=(z0.z.real, z0.z.imag), z1=(z1.z.real, z1.z.imag),
        z1_shift=abs(z1.z - z0.z), evans_residual=eig.evans_residual,
        q01_norm=l2_norm(down.q1), smallness_ratio=down.smallness_ratio,
        roundtrip_error=rt, coefficients=fit.coeffs, fit_residual=fit.residual,
        contraction_norm=mu0.contraction_norm, predicted_shift=pred.shift,
        predicted_phase=pred.phase)

    direct = _stage("direct_evolution", _direct_pass, q0, cfg, z1)

    stride = cfg.jost_stride
    ev = cfg.evolver()

    def q1_stream():
        for _, v in trajectory(down.q1, ev, every=stride):
            yield GridField(g, v)

    snaps = jost_evolve(q1_stream(), mu0, z1, cfg.dt * stride,
                        store_every=cfg.sample_steps // stride, tol=cfg.jost_tol,
                        refine=cfg.jost_refine)
    family = SolitonParams(z1, pred.shift, pred.phase)
    for k, (t, qd, cons, (r_full, r_half)) in enumerate(direct):
        js = _stage("jost_evolve", next, snaps)
        if abs(js.t - t) > 1e-9:
            raise PipelineError("jost_evolve", RuntimeError(f"time mismatch {js.t} vs {t}"))
        q1t = js.potential
        Q = _stage("bt_up", bt_up, q1t, js.mu, fit.coeffs, z1)
        od = orbital_distance(Q, z1, t)
        b1, b2 = boundary_values(z1, t)
        mu = js.mu
        jdev = (np.abs(mu.m11 - b1).max() / abs(b1)
                + np.sqrt(g.h * np.sum(np.abs(mu.m12) ** 2)) / abs(b2))
        rec.samples.append(SampleRow(
            t=t, d=od.d, a=od.a, b=od.b, M=cons.M, E=cons.E, P=cons.P,
            residual=r_full, residual_half=r_half, direct_mismatch=l2_norm(qd - Q),
            d_direct=orbital_distance(qd, z1, t).d, q1_norm=l2_norm(q1t),
            jost_deviation=float(jdev), jost_boundary=js.boundary_error,
            jost_x_residual=js.x_residual, anchor_drift=js.anchor_drift,
            prediction_error=l2_norm(Q - soliton_family(family, t, g))))
    rec.violations = _violations(rec, cfg)
    rec.runtime = time.perf_counter() - start
    return rec


def _violations(rec: StabilityRecord, cfg: ExperimentConfig) -> list[str]:
    out = []
    for name, drift in zip("MEP", rec.conservation_drift()):
        if drift >= cfg.drift_tol:
            out.append(f"{name} drift {drift:.3g} >= {cfg.drift_tol:g}")
    worst = max(rec.samples, key=lambda s: s.residual)
    if worst.residual >= cfg.zc_tol:
        out.append(f"zero-curvature residual {worst.residual:.3g} at t = {worst.t:g}")
    worst = max(rec.samples, key=lambda s: s.direct_mismatch)
    if worst.direct_mismatch >= cfg.mismatch_tol:
        out.append(f"direct vs transformed mismatch {worst.direct_mismatch:.3g} "
                   f"at t = {worst.t:g}")
    for s in rec.samples:
        vals = [getattr(s, f.name) for f in fields(SampleRow)]
        if not all(math.isfinite(v) for v in vals) or s.d < 0:
            out.append(f"non-finite or negative entries at t = {s.t:g}")
    return out


# ----------------------------------------------------------------------------
# sweeps

@dataclass
class SweepResult:
    records: list[StabilityRecord]
    errors: list[tuple[int, str]]
    summary: dict


def _fit_through_origin(x: np.ndarray, y: np.ndarray) -> float | None:
    return float(x @ y / (x @ x)) if len(x) and x @ x > 0 else None


def _loglog_slope(x: np.ndarray, y: np.ndarray) -> float | None:
    ok = (x > 0) & (y > 0)
    if len(np.unique(x[ok])) < 2:
        return None
    return float(np.polyfit(np.log(x[ok]), np.log(y[ok]), 1)[0])


def summarize(records: list[StabilityRecord]) -> dict:
    eps = np.array([r.epsilon for r in records])
    out = {"runs": len(records)}
    quantities = {
        "sup_distance": [r.sup_distance for r in records],
        "z1_shift": [r.z1_shift for r in records],
        "q01_norm": [r.q01_norm for r in records],
    }
    for name, vals in quantities.items():
        y = np.array(vals, dtype=float)
        pos = eps > 0
        out[name] = {"C": _fit_through_origin(eps[pos], y[pos]),
                     "loglog_slope": _loglog_slope(eps, y)}
    return out


def _run_safe(cfg: ExperimentConfig):
    try:
        return run_pipeline(cfg), None
    except Exception as exc:
        return None, f"{type(exc).__name__}: {exc}"


def sweep(cfgs: list[ExperimentConfig], workers: int = 1) -> SweepResult:
    """Run independent pipelines (in worker processes if workers > 1).

    Failures are collected per run; the fitted constants use the successful ones.
    """
    if not cfgs:
        raise ValueError("sweep needs at least one configuration")
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_safe, cfgs))
    else:
        results = [_run_safe(c) for c in cfgs]
    records = [r for r, _ in results if r is not None]
    errors = [(i, e) for i, (_, e) in enumerate(results) if e is not None]
    return SweepResult(records, errors, summarize(records) if records else {"runs": 0})

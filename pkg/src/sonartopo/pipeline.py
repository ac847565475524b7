"""End-to-end runs: signal -> embedding -> persistence -> echo report, with artifacts."""

from __future__ import annotations

import csv
import dataclasses
import hashlib
import json
import math
import platform
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from . import __version__
from .core import DomainDescriptor, DomainError, SignalMap, magnitude_channel
from .echoes import EchoReport, analyze
from .embedding import DelayConfig, delay_embed, pca_project
from .io import FormatError, ingest_array, write_cloud, write_diagram
from .persistence import METRICS, PersistenceDiagram, distance_matrix, ranked_features, rips_persistence
from .scatter import CollectionGeometry, add_awgn, csas_collect, normalize_peak, pipe_scene

NUMERIC_ARTIFACTS = (
    "signal.csv",
    "cloud.csv",
    "cloud_pca.csv",
    "diagram.csv",
    "echo_report.json",
    "diagram.svg",
    "pca.svg",
)


class ConfigError(DomainError):
    """The run configuration is invalid."""


class StageError(RuntimeError):
    """A computation stage failed; ``stage`` names it."""

    def __init__(self, stage: str, cause: Exception):
        super().__init__(f"[{stage}] {type(cause).__name__}: {cause}")
        self.stage = stage
        self.cause = cause


@dataclass(frozen=True)
class PipeSpec:
    length: float = 0.5
    width: float = 0.1
    per_side: int = 25
    reflectivity: float = 1.0
    center: tuple = (0.0, 0.6, 0.0)


@dataclass(frozen=True)
class RunConfig:
    """Parameters for one pipeline run.

    Either ``input`` names an array file, or the pipe scene is simulated on
    a circle of ``n_angles`` look angles at ``radius`` with ``n_wavenumbers``
    channels spread evenly over [k_min, k_max].
    """

    input: Optional[str] = None
    pipe: PipeSpec = field(default_factory=PipeSpec)
    n_angles: int = 360
    radius: float = 2.0
    k_min: float = 40.0
    k_max: float = 120.0
    n_wavenumbers: int = 100
    peak_cross_section: Optional[float] = 0.7
    sigma: float = 0.0
    seed: int = 0
    offsets: tuple = (0.0, 4.0, 25.0)
    reducer: str = "identity"
    range_gate: Optional[tuple] = None
    metric: str = "euclidean"
    max_dim: int = 1
    max_eps: Optional[float] = None
    threshold_fraction: float = 0.1
    tolerance: float = 0.1
    effective_sigma: Optional[float] = None
    noise_sigmas: tuple = (0.0, 0.002, 0.004, 0.006, 0.008, 0.01)
    output_dir: str = "out"

    def __post_init__(self):
        for name in ("offsets", "noise_sigmas"):
            object.__setattr__(self, name, tuple(float(v) for v in getattr(self, name)))
        if isinstance(self.pipe, dict):
            p = dict(self.pipe)
            if "center" in p:
                p["center"] = tuple(p["center"])
            try:
                object.__setattr__(self, "pipe", PipeSpec(**p))
            except TypeError as exc:
                raise ConfigError(f"pipe: {exc}") from None
        if self.range_gate is not None:
            object.__setattr__(self, "range_gate", tuple(self.range_gate))
        self.validate()

    def validate(self) -> None:
        if self.input is not None and not Path(self.input).exists():
            raise ConfigError(f"input file {self.input} does not exist")
        if self.n_angles < 2 or self.n_wavenumbers < 1:
            raise ConfigError("n_angles must be >= 2 and n_wavenumbers >= 1")
        if not 0 < self.k_min <= self.k_max:
            raise ConfigError("wavenumbers must satisfy 0 < k_min <= k_max")
        if self.n_wavenumbers > 1 and self.k_min == self.k_max:
            raise ConfigError("k_min must be below k_max when n_wavenumbers > 1")
        if self.radius <= 0:
            raise ConfigError("radius must be positive")
        if self.peak_cross_section is not None and self.peak_cross_section <= 0:
            raise ConfigError("peak_cross_section must be positive")
        if self.sigma < 0 or any(s < 0 for s in self.noise_sigmas):
            raise ConfigError("noise levels must be nonnegative")
        if self.metric not in METRICS:
            raise ConfigError(f"metric must be one of {METRICS}")
        if self.max_dim not in (0, 1, 2):
            raise ConfigError("max_dim must be 0, 1 or 2")
        if self.max_eps is not None and self.max_eps <= 0:
            raise ConfigError("max_eps must be positive")
        if not 0 < self.threshold_fraction < 1:
            raise ConfigError("threshold_fraction must lie in (0, 1)")
        if self.tolerance < 0:
            raise ConfigError("tolerance must be nonnegative")
        if self.effective_sigma is not None and self.effective_sigma <= 0:
            raise ConfigError("effective_sigma must be positive")
        try:
            DelayConfig(self.offsets, self.reducer, self.range_gate)
        except DomainError as exc:
            raise ConfigError(str(exc)) from None

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        extra = set(d) - known
        if extra:
            raise ConfigError(f"unknown config keys {sorted(extra)}")
        try:
            return cls(**d)
        except TypeError as exc:
            raise ConfigError(str(exc)) from None

    @classmethod
    def from_file(cls, path) -> "RunConfig":
        p = Path(path)
        if not p.exists():
            raise ConfigError(f"config file {p} does not exist")
        try:
            d = json.loads(p.read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{p}: invalid JSON at char {exc.pos}: {exc.msg}") from None
        if not isinstance(d, dict):
            raise ConfigError(f"{p}: config must be a JSON object")
        return cls.from_dict(d)

    def to_dict(self) -> dict:
        return json.loads(json.dumps(dataclasses.asdict(self)))

    def digest(self) -> str:
        return hashlib.sha256(json.dumps(self.to_dict(), sort_keys=True).encode()).hexdigest()

    def replace(self, **kw) -> "RunConfig":
        return dataclasses.replace(self, **kw)


def _stage(name):
    def wrap(fn):
        def run(*a, **kw):
            try:
                return fn(*a, **kw)
            except (ConfigError, FormatError, StageError):
                raise
            except Exception as exc:  # noqa: BLE001 - tag and re-raise
                raise StageError(name, exc) from exc

        return run

    return wrap


@_stage("simulate")
def clean_signal(cfg: RunConfig) -> SignalMap:
    """The noiseless map: simulated pipe scene, or the ingested array."""
    if cfg.input is not None:
        smap = ingest_array(cfg.input)
    else:
        p = cfg.pipe
        scene = pipe_scene(p.length, p.width, p.per_side, p.reflectivity, p.center)
        geom = CollectionGeometry(
            DomainDescriptor.circle(cfg.n_angles), cfg.radius, np.linspace(cfg.k_min, cfg.k_max, cfg.n_wavenumbers)
        )
        smap = csas_collect(scene, geom)
    if cfg.peak_cross_section is not None:
        smap = normalize_peak(smap, cfg.peak_cross_section, "l2")
    return smap


@_stage("noise")
def noisy_signal(clean: SignalMap, sigma: float, seed: int) -> SignalMap:
    return add_awgn(clean, sigma, seed)


@_stage("embed")
def embed(smap: SignalMap, cfg: RunConfig):
    return delay_embed(smap, DelayConfig(cfg.offsets, cfg.reducer, cfg.range_gate))


@_stage("persist")
def persist(cloud, cfg: RunConfig) -> PersistenceDiagram:
    return rips_persistence(distance_matrix(cloud, cfg.metric), cfg.max_dim, cfg.max_eps)


@_stage("analyze")
def report(smap: SignalMap, diag: PersistenceDiagram, cfg: RunConfig) -> EchoReport:
    return analyze(smap, diag, cfg.threshold_fraction, cfg.tolerance, cfg.effective_sigma)


def _fmt(x) -> str:
    return "inf" if math.isinf(x) else repr(float(x))


def _write_signal(smap: SignalMap, path: Path) -> None:
    mag = magnitude_channel(smap, "magnitude").samples
    angles = np.arange(smap.domain.size) * (360.0 / smap.domain.size)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["angle_deg"] + [f"c{j}" for j in range(mag.shape[1])])
        for a, row in zip(angles, mag):
            w.writerow([_fmt(a)] + [_fmt(v) for v in row])


def _svg(width, height, body) -> str:
    return (
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">\n<rect width="100%" height="100%" fill="white"/>\n'
        + "\n".join(body)
        + "\n</svg>\n"
    )


def diagram_svg(diag: PersistenceDiagram, size: int = 400) -> str:
    """Birth/death scatter with the diagonal; infinite deaths sit on the top edge."""
    pad = 40
    finite = [f.death for f in diag.features if f.finite]
    top = max(finite + [f.birth for f in diag.features] + [1e-12])
    if math.isfinite(diag.max_eps):
        top = max(top, diag.max_eps)
    top *= 1.05
    span = size - 2 * pad

    def xy(b, d):
        x = pad + span * b / top
        y = size - pad - span * (min(d, top) / top)
        return f"{x:.3f}", f"{y:.3f}"

    colors = {0: "#1f77b4", 1: "#d62728", 2: "#2ca02c"}
    body = [
        f'<line x1="{pad}" y1="{size - pad}" x2="{size - pad}" y2="{pad}" stroke="gray" stroke-dasharray="4"/>',
        f'<line x1="{pad}" y1="{size - pad}" x2="{size - pad}" y2="{size - pad}" stroke="black"/>',
        f'<line x1="{pad}" y1="{size - pad}" x2="{pad}" y2="{pad}" stroke="black"/>',
        f'<text x="{size / 2}" y="{size - 8}" text-anchor="middle" font-size="12">birth</text>',
        f'<text x="12" y="{size / 2}" font-size="12" transform="rotate(-90 12 {size / 2})">death</text>',
    ]
    for f in diag.features:
        x, y = xy(f.birth, f.death)
        marker = "none" if f.finite else "black"
        body.append(f'<circle cx="{x}" cy="{y}" r="3" fill="{colors[f.dim]}" stroke="{marker}"/>')
    return _svg(size, size, body)


def pca_svg(points: np.ndarray, size: int = 400) -> str:
    """First two principal coordinates as a closed polyline."""
    pad = 20
    p = points[:, :2] if points.shape[1] >= 2 else np.column_stack([points[:, 0], np.zeros(len(points))])
    lo = p.min(axis=0)
    span = max(float((p.max(axis=0) - lo).max()), 1e-12)
    q = pad + (size - 2 * pad) * (p - lo) / span
    pts = " ".join(f"{x:.3f},{size - y:.3f}" for x, y in q)
    return _svg(size, size, [f'<polygon points="{pts}" fill="none" stroke="#1f77b4" stroke-width="1"/>'])


def _versions() -> dict:
    import numba
    import scipy

    return {
        "sonartopo": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "numba": numba.__version__,
    }


def _sha(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def run_pipeline(cfg: RunConfig, output_dir=None) -> dict:
    """Run every stage and write the artifacts; returns a summary dict."""
    out = Path(output_dir or cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    clean = clean_signal(cfg)
    smap = noisy_signal(clean, cfg.sigma, cfg.seed)
    cloud = embed(smap, cfg)
    proj = pca_project(cloud, min(3, cloud.ambient_dim))
    diag = persist(cloud, cfg)
    rep = report(smap, diag, cfg)

    _write_signal(smap, out / "signal.csv")
    write_cloud(cloud, out / "cloud.csv")
    write_cloud(proj, out / "cloud_pca.csv")
    write_diagram(diag, out / "diagram.csv")
    (out / "echo_report.json").write_text(rep.to_json())
    (out / "diagram.svg").write_text(diagram_svg(diag))
    (out / "pca.svg").write_text(pca_svg(proj.points))

    manifest = {
        "config": cfg.to_dict(),
        "config_sha256": cfg.digest(),
        "seed": cfg.seed,
        "versions": _versions(),
        "timestamp": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
        "artifacts": {name: _sha(out / name) for name in NUMERIC_ARTIFACTS},
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return {"diagram": diag, "report": rep, "cloud": cloud, "signal": smap, "manifest": manifest}


def top_loop(diag: PersistenceDiagram):
    """(death, persistence) of the longest-lived H1 feature, or (nan, nan)."""
    feats = ranked_features(diag, 1)
    if not feats:
        return math.nan, math.nan
    f = feats[0]
    return f.death, f.lifetime


def noise_sweep(cfg: RunConfig, output_dir=None) -> list:
    """Top-loop death and persistence at each noise level.

    Every level reuses ``cfg.seed``, so the noise fields differ only in scale
    and the curve reflects the noise level rather than the draw.
    """
    out = Path(output_dir or cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    clean = clean_signal(cfg)
    rows = []
    for sigma in cfg.noise_sigmas:
        cloud = embed(noisy_signal(clean, sigma, cfg.seed), cfg)
        death, pers = top_loop(persist(cloud, cfg))
        rows.append((sigma, death, pers))
    with open(out / "noise_sweep.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["sigma", "top_loop_death", "top_loop_persistence"])
        for s, d, p in rows:
            w.writerow([_fmt(s), _fmt(d), _fmt(p)])
    return rows


__all__ = [
    "RunConfig",
    "PipeSpec",
    "ConfigError",
    "StageError",
    "run_pipeline",
    "noise_sweep",
    "clean_signal",
    "top_loop",
    "diagram_svg",
    "pca_svg",
    "NUMERIC_ARTIFACTS",
]

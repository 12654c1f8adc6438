"""Time-domain 2D acoustic simulation over heterogeneous media.

First-order velocity-pressure FDTD on a staggered grid with split-field PML.
The domain is a square source region (default 2.56 m) with a centered
observation window (default 1.28 m); objects live inside the observation
window, sources outside it.  The hot per-step stencil lives in
``soundfield.kernels`` (compiled extension or numpy fallback).

Point-source injection is calibrated against the 2D free-field Green's
function so a source of amplitude A yields |p| = A at 0.5 m; line sources
are calibrated to emit plane waves of amplitude A.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.special import hankel1

from . import kernels
from .core import FieldVideo, Rng, SilhouetteMask, SpectralImage
from .geometry import (
    AIR_SOUND_SPEED,
    GeometryConfig,
    MediumMap,
    build_medium,
    rasterize,
    sample_shapes,
)

FREQ_RANGE_HZ = (90.0, 2800.0)
AMPLITUDE_RANGE_PA = (0.1, 1.0)
WAVENUMBER_RANGE = (1.66, 51.7)  # rad/m, 2*pi*f / 340
# Upper frequency actually sampled: keeps 2*pi*f/340 within WAVENUMBER_RANGE.
FREQ_MAX_SAMPLED_HZ = WAVENUMBER_RANGE[1] * AIR_SOUND_SPEED / (2 * math.pi)

POINT_CALIBRATION_DISTANCE_M = 0.5


class CflError(RuntimeError):
    """Time step violates the 2D stability bound c_max*dt/dx <= 1/sqrt(2)."""


class SimulationUnstableError(RuntimeError):
    """Non-finite field values encountered mid-run."""


@dataclass(frozen=True)
class SimConfig:
    """Discretization and domain layout for one simulation."""

    dx: float = 0.01                 # m
    dt: float = 1.21e-5              # s
    extent_m: float = 2.56           # side of the source region square
    obs_extent_m: float = 1.28       # side of the centered observation window
    pml_cells: int = 10
    pml_axes: tuple = ("x", "y")
    ramp_periods: float = 3.0        # raised-cosine source onset
    min_window: int = 128            # analysis window >= this many samples
    steps: int | None = None         # None: settle + analysis window
    settle_steps: int | None = None  # None: domain-diagonal transit time
    record_start: int | None = None  # None: steps - analysis window

    @property
    def fs(self):
        return 1.0 / self.dt

    @property
    def domain_cells(self):
        return int(round(self.extent_m / self.dx))

    @property
    def obs_cells(self):
        return int(round(self.obs_extent_m / self.dx))

    @property
    def obs_offset(self):
        """Offset of the observation window inside the domain grid (cells)."""
        return (self.domain_cells - self.obs_cells) // 2

    def analysis_window(self, freq_hz):
        """Smallest integer-period window of >= min_window samples for freq_hz.

        For frequencies produced by :func:`snap_frequency` an exactly
        integer-period window exists and is found by direct search; otherwise
        the nearest near-integer-period window is returned.
        """
        if freq_hz <= 0:
            raise ValueError("freq_hz must be positive")
        max_w = self.min_window + math.ceil(self.fs / freq_hz) + 1
        for w in range(self.min_window, max_w):
            periods = w * freq_hz / self.fs
            if round(periods) >= 1 and abs(periods - round(periods)) < 1e-9:
                return w
        periods = max(1, math.ceil(self.min_window * freq_hz / self.fs))
        return max(self.min_window, math.ceil(periods * self.fs / freq_hz))

    def default_settle_steps(self):
        diag = math.sqrt(2.0) * self.extent_m
        return math.ceil(diag / (AIR_SOUND_SPEED * self.dt))

    def total_steps(self, freq_hz):
        if self.steps is not None:
            return self.steps
        settle = self.settle_steps if self.settle_steps is not None else self.default_settle_steps()
        return settle + self.analysis_window(freq_hz)


def snap_frequency(freq_hz, cfg: SimConfig):
    """Snap a frequency onto the nearest-not-above DFT bin of its analysis window.

    Rounding the window length up guarantees the snapped frequency never
    exceeds the requested one, keeping the sampled wavenumber inside
    WAVENUMBER_RANGE.
    """
    periods = max(1, math.ceil(cfg.min_window * freq_hz / cfg.fs))
    window = math.ceil(periods * cfg.fs / freq_hz)
    return periods * cfg.fs / window


@dataclass(frozen=True)
class Source:
    """Point pressure source outside the observation area.

    ``position`` is (x, y) in metres within the domain square; amplitude is
    the calibrated free-field pressure amplitude in Pa.
    """

    position: tuple
    amplitude: float
    freq_hz: float
    phase: float = 0.0

    def __post_init__(self):
        if not (FREQ_RANGE_HZ[0] <= self.freq_hz <= FREQ_RANGE_HZ[1]):
            raise ValueError(f"freq_hz {self.freq_hz} outside {FREQ_RANGE_HZ}")
        if not (AMPLITUDE_RANGE_PA[0] <= self.amplitude <= AMPLITUDE_RANGE_PA[1]):
            raise ValueError(f"amplitude {self.amplitude} outside {AMPLITUDE_RANGE_PA}")

    def to_json(self):
        return {
            "position": list(self.position),
            "amplitude": self.amplitude,
            "freq_hz": self.freq_hz,
            "phase": self.phase,
        }

    @staticmethod
    def from_json(obj):
        return Source(tuple(obj["position"]), obj["amplitude"], obj["freq_hz"], obj["phase"])


@dataclass(frozen=True)
class Scene:
    """One simulation description: medium over the domain grid, sources, mask."""

    medium: MediumMap
    sources: tuple
    mask: SilhouetteMask
    seed: int = 0
    shapes: tuple = ()   # provenance only

    def __post_init__(self):
        object.__setattr__(self, "sources", tuple(self.sources))
        object.__setattr__(self, "shapes", tuple(self.shapes))
        if not (1 <= len(self.sources) <= 5):
            raise ValueError("scene needs 1-5 sources")
        freqs = {s.freq_hz for s in self.sources}
        if len(freqs) != 1:
            raise ValueError("all sources must share one freq_hz")
        if self.sources[0].amplitude != 1.0:
            raise ValueError("first source amplitude must be exactly 1.0 Pa")

    @property
    def freq_hz(self):
        return self.sources[0].freq_hz


@dataclass(frozen=True)
class Injection:
    """Low-level source term: a cell (or whole column) driven sinusoidally."""

    col: int
    row: int | None          # None: drive the full column (plane-wave line source)
    amplitude: float
    freq_hz: float
    phase: float = 0.0
    calibration: str = "point"  # "point" | "plane" | "raw"


def _pml_sigma(n_cells, pml_cells, dx, stagger, c_ref, order=3, r_target=1e-6):
    """Absorption profile along one axis, evaluated at centers or faces.

    ``stagger`` is 0.5 for cell centers, 1.0 for faces (in units of dx from
    the cell's low edge).
    """
    coords = (np.arange(n_cells) + stagger) * dx
    total = n_cells * dx
    sigma = np.zeros(n_cells)
    if pml_cells <= 0:
        return sigma
    width = pml_cells * dx
    sigma_max = -(order + 1) * c_ref * math.log(r_target) / (2.0 * width)
    left_depth = np.clip((width - coords) / width, 0.0, 1.0)
    right_depth = np.clip((coords - (total - width)) / width, 0.0, 1.0)
    sigma = sigma_max * (left_depth**order + right_depth**order)
    return sigma


def point_source_step_amplitude(amplitude, freq_hz, cfg: SimConfig, c=AIR_SOUND_SPEED):
    """Per-step additive value giving free-field |p| = amplitude at 0.5 m.

    From the 2D Green's function: a per-step addition s at one cell acts as a
    forcing density s/(dt*dx^2) of dp/dt, radiating
    |p|(r) = omega * s * dx^2 / (4 c^2 dt) * |H0(kr)|.
    """
    omega = 2 * math.pi * freq_hz
    k = omega / c
    h0 = abs(hankel1(0, k * POINT_CALIBRATION_DISTANCE_M))
    return amplitude * 4.0 * c**2 * cfg.dt / (omega * cfg.dx**2 * h0)


def plane_source_step_amplitude(amplitude, cfg: SimConfig, c=AIR_SOUND_SPEED):
    """Per-step additive value for a line source emitting plane waves of |p| = amplitude."""
    return amplitude * 2.0 * c * cfg.dt / cfg.dx


def free_field_amplitude(amplitude, freq_hz, r, c=AIR_SOUND_SPEED):
    """Analytic steady-state |p| at distance r for a calibrated point source."""
    k = 2 * math.pi * freq_hz / c
    return (
        amplitude
        * np.abs(hankel1(0, k * np.asarray(r)))
        / abs(hankel1(0, k * POINT_CALIBRATION_DISTANCE_M))
    )


def _pad_medium(medium: MediumMap, pml_cells):
    c = np.pad(medium.sound_speed, pml_cells, mode="edge")
    rho = np.pad(medium.density, pml_cells, mode="edge")
    return c, rho


def run_fdtd(medium: MediumMap, injections, cfg: SimConfig, steps, record_start=0,
             record_region=None):
    """Run the leapfrog scheme and record pressure frames.

    ``record_region`` is ((x0, x1), (y0, y1)) in domain-grid cells (pre-PML
    coordinates); None records the whole domain.  Returns a FieldVideo of the
    recorded window with fs = 1/dt.
    """
    c, rho = _pad_medium(medium, cfg.pml_cells)
    nx, ny = c.shape
    dt, dx = cfg.dt, cfg.dx
    cfl = float(c.max()) * dt / dx
    if cfl > 1.0 / math.sqrt(2.0):
        raise CflError(f"c_max*dt/dx = {cfl:.3f} exceeds 1/sqrt(2)")

    c_ref = float(c.max())
    pml_x = cfg.pml_cells if "x" in cfg.pml_axes else 0
    pml_y = cfg.pml_cells if "y" in cfg.pml_axes else 0
    sig_xp = _pml_sigma(nx, pml_x, dx, 0.5, c_ref)
    sig_xv = _pml_sigma(nx - 1, pml_x, dx, 1.0, c_ref)
    sig_yp = _pml_sigma(ny, pml_y, dx, 0.5, c_ref)
    sig_yv = _pml_sigma(ny - 1, pml_y, dx, 1.0, c_ref)

    bulk = rho * c * c
    rho_xface = 0.5 * (rho[1:, :] + rho[:-1, :])
    rho_yface = 0.5 * (rho[:, 1:] + rho[:, :-1])

    def decay(sig):
        return (1.0 - sig * dt / 2.0) / (1.0 + sig * dt / 2.0)

    vax = np.ascontiguousarray(np.broadcast_to(decay(sig_xv)[:, None], (nx - 1, ny)))
    vbx = (dt / (dx * rho_xface)) / (1.0 + sig_xv[:, None] * dt / 2.0)
    vay = np.ascontiguousarray(np.broadcast_to(decay(sig_yv)[None, :], (nx, ny - 1)))
    vby = (dt / (dx * rho_yface)) / (1.0 + sig_yv[None, :] * dt / 2.0)
    pax = np.ascontiguousarray(np.broadcast_to(decay(sig_xp)[:, None], (nx, ny)))
    pbx = (dt * bulk / dx) / (1.0 + sig_xp[:, None] * dt / 2.0)
    pay = np.ascontiguousarray(np.broadcast_to(decay(sig_yp)[None, :], (nx, ny)))
    pby = (dt * bulk / dx) / (1.0 + sig_yp[None, :] * dt / 2.0)
    vbx = np.ascontiguousarray(vbx)
    vby = np.ascontiguousarray(vby)
    pbx = np.ascontiguousarray(pbx)
    pby = np.ascontiguousarray(pby)

    px = np.zeros((nx, ny))
    py = np.zeros((nx, ny))
    vx = np.zeros((nx - 1, ny))
    vy = np.zeros((nx, ny - 1))
    p = np.zeros((nx, ny))

    # Precompute per-injection source signals (ramped sinusoids).
    t = np.arange(steps) * dt
    signals = []
    for inj in injections:
        if inj.calibration == "point":
            amp = point_source_step_amplitude(inj.amplitude, inj.freq_hz, cfg)
        elif inj.calibration == "plane":
            amp = plane_source_step_amplitude(inj.amplitude, cfg)
        elif inj.calibration == "raw":
            amp = inj.amplitude
        else:
            raise ValueError(f"unknown calibration {inj.calibration!r}")
        ramp_len = cfg.ramp_periods / inj.freq_hz
        ramp = np.where(t < ramp_len, 0.5 * (1 - np.cos(math.pi * t / ramp_len)), 1.0)
        sig = amp * np.sin(2 * math.pi * inj.freq_hz * t + inj.phase) * ramp
        ix = inj.col + cfg.pml_cells
        iy = None if inj.row is None else inj.row + cfg.pml_cells
        signals.append((ix, iy, sig))

    if record_region is None:
        (x0, x1), (y0, y1) = (0, medium.sound_speed.shape[0]), (0, medium.sound_speed.shape[1])
    else:
        (x0, x1), (y0, y1) = record_region
    rx = slice(x0 + cfg.pml_cells, x1 + cfg.pml_cells)
    ry = slice(y0 + cfg.pml_cells, y1 + cfg.pml_cells)
    n_rec = steps - record_start
    if n_rec < 1:
        raise ValueError("record_start leaves no frames to record")
    frames = np.empty((x1 - x0, y1 - y0, n_rec))

    for n in range(steps):
        kernels.fdtd_step(px, py, vx, vy, p, vax, vbx, vay, vby, pax, pbx, pay, pby)
        for ix, iy, sig in signals:
            s = sig[n]
            if iy is None:
                px[ix, :] += 0.5 * s
                py[ix, :] += 0.5 * s
            else:
                px[ix, iy] += 0.5 * s
                py[ix, iy] += 0.5 * s
        if n >= record_start:
            frames[:, :, n - record_start] = px[rx, ry] + py[rx, ry]
        if n % 256 == 255 and not np.isfinite(px[::7, ::7]).all():
            raise SimulationUnstableError(f"non-finite pressure at step {n}")

    if not np.isfinite(frames).all():
        raise SimulationUnstableError("non-finite pressure in recorded frames")
    return FieldVideo(data=frames, dx=cfg.dx, fs=cfg.fs)


def simulate(scene: Scene, cfg: SimConfig = SimConfig()) -> FieldVideo:
    """Simulate a scene and return the observation-window recording.

    By default records the final analysis window (an integer number of
    periods) after the settling time; set ``cfg.record_start = 0`` to keep
    the full run.
    """
    steps = cfg.total_steps(scene.freq_hz)
    window = cfg.analysis_window(scene.freq_hz)
    record_start = cfg.record_start if cfg.record_start is not None else steps - window
    injections = []
    for s in scene.sources:
        col = int(s.position[0] / cfg.dx)
        row = int(s.position[1] / cfg.dx)
        col = min(max(col, 0), cfg.domain_cells - 1)
        row = min(max(row, 0), cfg.domain_cells - 1)
        injections.append(
            Injection(col=col, row=row, amplitude=s.amplitude, freq_hz=s.freq_hz,
                      phase=s.phase, calibration="point")
        )
    off, n = cfg.obs_offset, cfg.obs_cells
    return run_fdtd(
        scene.medium, injections, cfg, steps, record_start=record_start,
        record_region=((off, off + n), (off, off + n)),
    )


def clean_target(field_video: FieldVideo, mask: SilhouetteMask, freq_hz) -> SpectralImage:
    """Amplitude-calibrated per-pixel DFT at the bin nearest freq_hz.

    With an integer-period window, a pixel A*cos(2 pi f t + phi) maps to
    re = A cos(phi), im = A sin(phi).  Silhouette pixels are forced to
    exactly (0, 0).
    """
    T = field_video.num_frames
    # tolerant comparison: a snapped one-period window has T*f == fs up to
    # rounding, and must not be rejected
    if freq_hz <= 0 or T * freq_hz < field_video.fs * (1.0 - 1e-9):
        raise ValueError("analysis window shorter than one period of freq_hz")
    k = int(round(freq_hz * T / field_video.fs))
    k = min(max(k, 0), T // 2)
    phasor = np.exp(-2j * math.pi * k * np.arange(T) / T)
    amp = (2.0 / T) * (field_video.data @ phasor)
    sil = mask.labels.astype(bool)
    re = amp.real.copy()
    im = amp.imag.copy()
    re[sil] = 0.0
    im[sil] = 0.0
    return SpectralImage(re=re, im=im, freq_hz=k * field_video.fs / T, bin_index=k)


def sample_scene(rng: Rng, geometry_config: GeometryConfig = GeometryConfig(),
                 sim_config: SimConfig = SimConfig(), num_sources=None) -> Scene:
    """Draw a random scene: shapes, medium, and 1-5 same-frequency sources.

    Frequency ~ U[90, FREQ_MAX_SAMPLED_HZ], snapped to an integer-period
    analysis window; first source amplitude is exactly 1.0 Pa, the rest
    ~ U[0.1, 1.0]; positions uniform over the source region minus the
    observation window.
    """
    g_freq = rng.split("freq").generator()
    g_src = rng.split("sources").generator()
    freq = snap_frequency(g_freq.uniform(FREQ_RANGE_HZ[0], FREQ_MAX_SAMPLED_HZ), sim_config)

    cfg = sim_config
    obs_cells = (cfg.obs_cells, cfg.obs_cells)
    geometry_config = replace(geometry_config, obs_extent_m=cfg.obs_extent_m)
    shapes = sample_shapes(rng.split("shapes"), geometry_config, obs_cells, cfg.dx)
    mask = rasterize(shapes, obs_cells, cfg.dx)
    medium = build_medium(mask, cfg.obs_offset, (cfg.domain_cells, cfg.domain_cells))

    if num_sources is None:
        num_sources = int(g_src.integers(1, 6))
    lo = (cfg.extent_m - cfg.obs_extent_m) / 2.0
    hi = lo + cfg.obs_extent_m
    sources = []
    for i in range(num_sources):
        while True:
            x = g_src.uniform(0.0, cfg.extent_m)
            y = g_src.uniform(0.0, cfg.extent_m)
            if not (lo <= x < hi and lo <= y < hi):
                break
        amp = 1.0 if i == 0 else float(g_src.uniform(*AMPLITUDE_RANGE_PA))
        phase = float(g_src.uniform(0.0, 2 * math.pi))
        sources.append(Source(position=(x, y), amplitude=amp, freq_hz=freq, phase=phase))
    return Scene(medium=medium, sources=tuple(sources), mask=mask, seed=rng.stream,
                 shapes=tuple(shapes))


def scene_provenance(scene: Scene, cfg: SimConfig):
    """JSON-serializable provenance for a generated scene."""
    return {
        "freq_hz": scene.freq_hz,
        "seed_stream": scene.seed,
        "sources": [s.to_json() for s in scene.sources],
        "shapes": [s.to_json() for s in scene.shapes],
        "dx": cfg.dx,
        "dt": cfg.dt,
        "extent_m": cfg.extent_m,
        "obs_extent_m": cfg.obs_extent_m,
    }

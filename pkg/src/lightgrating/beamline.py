"""Source -> collimator -> grating -> detector: the full beamline average.

Wave mode propagates each absorption channel of each point source through
the Fresnel integral and sums intensities over channels, source points,
velocities and vertical positions — a triple deterministic quadrature of
``point_source_pattern``.  Orders mode places the analytic diffraction-order
weights on the geometric shadow envelope instead; it is orders of magnitude
faster and serves as the cross-check of the wave pipeline.
"""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import TYPE_CHECKING

import numpy as np

from . import backend
from .distributions import detector_kernel, velocity_quadrature, vertical_phi_scales
from .grating import (
    ComplexPhase,
    GratingBeam,
    GridSpec,
    TransmissionChannel,
    channel_amplitudes,
    compute_phi,
    truncation_order,
)
from .orders import incoherent_order_intensities
from .propagation import next_pow2, propagate_spectral
from .species import HBAR, MoleculeSpecies, de_broglie_wavelength

if TYPE_CHECKING:
    from .config import SimulationConfig


@dataclass(frozen=True)
class BeamlineGeometry:
    """Slit widths and flight distances of the two-slit beamline."""

    slit1: float = 7e-6
    slit2: float = 5e-6
    L12: float = 1.13
    L2D: float = 1.2
    detector_span: float = 300e-6

    def __post_init__(self) -> None:
        for name in ("slit1", "slit2", "L12", "L2D", "detector_span"):
            if not getattr(self, name) > 0.0:
                raise ValueError(f"{name} must be positive")


@dataclass
class DiffractionPattern:
    """Detector-plane intensity on a uniform scan grid plus provenance."""

    positions: np.ndarray
    intensity: np.ndarray
    metadata: dict = field(default_factory=dict)

    @property
    def step(self) -> float:
        return float(self.positions[1] - self.positions[0])


@dataclass(frozen=True)
class PatternMetrics:
    """Window-integrated order efficiencies and central visibility."""

    efficiencies: dict[int, float]
    visibility: float
    window: float


def order_slot_spacing(
    species: MoleculeSpecies, velocity: float, beam: GratingBeam, geom: BeamlineGeometry
) -> float:
    """Detector-plane distance between adjacent hbar*k momentum slots."""
    if not velocity > 0.0:
        raise ValueError("velocity must be positive")
    return HBAR * beam.k_laser / (species.mass_kg * velocity) * geom.L2D


def farfield_peak_positions(
    species: MoleculeSpecies,
    velocity: float,
    beam: GratingBeam,
    geom: BeamlineGeometry,
    m_max: int = 5,
) -> np.ndarray:
    """Principal (even-slot) far-field peak positions m*(2 hbar k/Mv)*L2D."""
    spacing = 2.0 * order_slot_spacing(species, velocity, beam, geom)
    return np.arange(-m_max, m_max + 1) * spacing


def geometric_envelope(geom: BeamlineGeometry, x: np.ndarray) -> np.ndarray:
    """Unit-area ray-optics shadow of the two slits at the detector plane.

    A uniform incoherent source across slit1 projected through slit2 gives
    the convolution of two top-hats: widths slit2*(1+r) and slit1*r with
    r = L2D/L12 — a trapezoid.  Evaluated pointwise at ``x``.
    """
    x = np.asarray(x, dtype=np.float64)
    r = geom.L2D / geom.L12
    wide = geom.slit2 * (1.0 + r)
    narrow = geom.slit1 * r
    if narrow > wide:
        wide, narrow = narrow, wide
    if narrow <= 0.0:
        return np.where(np.abs(x) <= 0.5 * wide, 1.0 / wide, 0.0)
    ax = np.abs(x)
    flat = 0.5 * (wide - narrow)
    base = 0.5 * (wide + narrow)
    ramp = (base - ax) / (wide * narrow)
    return np.where(ax <= flat, 1.0 / wide, np.where(ax < base, ramp, 0.0))


def aperture_mask(x: np.ndarray, spacing: float, width: float) -> np.ndarray:
    """Fractional overlap of each grid cell with a centred slit."""
    half = 0.5 * width
    lo = np.maximum(x - 0.5 * spacing, -half)
    hi = np.minimum(x + 0.5 * spacing, half)
    return np.clip((hi - lo) / spacing, 0.0, 1.0)


def grating_window(
    beam: GratingBeam, geom: BeamlineGeometry, samples_per_period: int
) -> tuple[GridSpec, np.ndarray]:
    """Sampling grid over the illuminated part of the grating plane.

    The window covers slit2 plus a 4-wavelength margin, rounded up to an
    even number of grating periods (grid convention), and the slit2
    aperture is a fractional-overlap mask on that grid.
    """
    window = geom.slit2 + 4.0 * beam.wavelength
    periods = int(math.ceil(window / beam.period))
    if periods % 2 == 1:
        periods += 1
    periods = max(periods, 2)
    grid = GridSpec(
        periods=periods, samples_per_period=samples_per_period, wavelength=beam.wavelength
    )
    mask = aperture_mask(grid.positions(), grid.spacing, geom.slit2)
    return grid, mask


def source_quadrature(geom: BeamlineGeometry, n_nodes: int) -> tuple[np.ndarray, np.ndarray]:
    """Midpoint nodes across slit1 with uniform weights (incoherent source)."""
    if n_nodes < 1:
        raise ValueError("n_nodes must be >= 1")
    width = geom.slit1 / n_nodes
    nodes = -0.5 * geom.slit1 + (np.arange(n_nodes) + 0.5) * width
    return nodes, np.full(n_nodes, 1.0 / n_nodes)


def point_source_pattern(
    source_x: float,
    wavelength: float,
    channels: list[TransmissionChannel],
    geom: BeamlineGeometry,
    pad_factor: int = 4,
) -> tuple[np.ndarray, np.ndarray]:
    """Detector-plane intensity of one coherent point source.

    The cylindrical wave from ``source_x`` in slit1 reaches the grating
    plane (coplanar with slit2) as a quadratic phase front; it is clipped
    by slit2, multiplied by every absorption-channel transmission, each
    product is Fresnel-propagated over L2D, and the channel intensities
    add incoherently.  Returns the native spectral output grid and the
    intensity per unit length on it.
    """
    if abs(source_x) > 0.5 * geom.slit1:
        raise ValueError("source point outside slit1")
    if not channels:
        raise ValueError("need at least one transmission channel")
    grid = channels[0].grid
    x = grid.positions()
    mask = aperture_mask(x, grid.spacing, geom.slit2)
    k = 2.0 * math.pi / wavelength
    chirp = np.exp(1j * (0.5 * k / geom.L12) * (x - source_x) ** 2)
    total: np.ndarray | None = None
    x_out: np.ndarray | None = None
    for channel in channels:
        if channel.grid is not grid and channel.grid != grid:
            raise ValueError("all channels must share one grid")
        x_out, psi = propagate_spectral(
            chirp * mask * channel.samples,
            grid.spacing,
            wavelength,
            geom.L2D,
            float(x[0]),
            pad_factor,
        )
        contribution = psi.real**2 + psi.imag**2
        total = contribution if total is None else total + contribution
    assert total is not None and x_out is not None
    return x_out, total


def _scan_grid(geom: BeamlineGeometry, step: float) -> np.ndarray:
    n_half = int(math.floor(0.5 * geom.detector_span / step + 1e-9))
    return np.arange(-n_half, n_half + 1) * step


def _internal_grid(geom: BeamlineGeometry, detector_width: float, internal_step: float) -> np.ndarray:
    half_extent = 0.5 * geom.detector_span + 3.0 * max(detector_width, internal_step) + 2e-6
    n_half = int(math.ceil(half_extent / internal_step))
    return np.arange(-n_half, n_half + 1) * internal_step


def _wave_velocity_slice(
    cfg: "SimulationConfig",
    velocity: float,
    grid: GridSpec,
    mask: np.ndarray,
    scales: np.ndarray,
    scale_weights: np.ndarray,
    src_nodes: np.ndarray,
    src_weights: np.ndarray,
) -> tuple[np.ndarray, np.ndarray, ComplexPhase, float, float]:
    """One velocity node of the wave-mode ensemble.

    Returns (native positions, native intensity, phi, input power,
    in-span fraction).  Pure function of its arguments; safe to run on a
    worker thread.
    """
    geom = cfg.geometry
    beam = cfg.beam
    wavelength = de_broglie_wavelength(cfg.species, velocity)
    k = 2.0 * math.pi / wavelength
    k_laser = beam.k_laser
    phi = compute_phi(cfg.species, beam, velocity)
    x = grid.positions()
    spacing = grid.spacing
    n_fft = next_pow2(grid.size * cfg.numerics.pad_factor)

    # Quadratic phases of the incoming cylindrical wave (L12) and of the
    # outgoing Fresnel kernel (L2D) combine into one chirp; each source
    # point then contributes only a linear phase ramp.  Constant phases
    # drop out of |psi|^2.
    base = mask * np.exp(1j * (0.5 * k * (1.0 / geom.L12 + 1.0 / geom.L2D)) * x**2)
    ramps = np.exp(-1j * (k / geom.L12) * np.outer(src_nodes, x))

    intensity = np.zeros(n_fft)
    power_in = 0.0
    # |prefactor|^2 of the Fresnel integral; output phases are unimodular.
    out_scale = spacing**2 / (wavelength * geom.L2D)
    for scale, scale_weight in zip(scales, scale_weights):
        phi_local = phi.scaled(float(scale))
        n_max = truncation_order(phi_local, cfg.numerics.tail_eps)
        channels = channel_amplitudes(phi_local, n_max, k_laser, x)
        banked = channels * base  # (n_channels, n_in)
        power_in += scale_weight * spacing * float(
            np.sum(banked.real**2 + banked.imag**2)
        )
        fields = (ramps[:, None, :] * banked[None, :, :]).reshape(-1, grid.size)
        transform = np.fft.fft(fields, n=n_fft, axis=-1)
        for i_src in range(src_nodes.size):
            rows = transform[i_src * (n_max + 1) : (i_src + 1) * (n_max + 1)]
            backend.accumulate_weighted_abs2(
                rows, float(scale_weight * src_weights[i_src] * out_scale), intensity
            )
    intensity = np.fft.fftshift(intensity)
    out_spacing = wavelength * geom.L2D / (n_fft * spacing)
    x_native = (np.arange(n_fft) - n_fft // 2) * out_spacing
    total = float(intensity.sum() * out_spacing)
    in_span = np.abs(x_native) <= 0.5 * geom.detector_span
    coverage = float(intensity[in_span].sum() * out_spacing) / total if total > 0 else 0.0
    return x_native, intensity, phi, power_in, coverage


def _finalize(
    cfg: "SimulationConfig",
    common_x: np.ndarray,
    accumulated: np.ndarray,
    metadata: dict,
) -> DiffractionPattern:
    kernel = detector_kernel(cfg.detector, cfg.numerics.internal_step)
    blurred = np.convolve(accumulated, kernel, mode="same")
    scan_x = _scan_grid(cfg.geometry, cfg.detector.step)
    scan_intensity = np.interp(scan_x, common_x, blurred)
    scan_intensity = np.maximum(scan_intensity, 0.0)
    if cfg.run.normalization == "peak":
        peak = scan_intensity.max()
        if peak > 0.0:
            scan_intensity = scan_intensity / peak
    else:
        total = scan_intensity.sum()
        if total > 0.0:
            scan_intensity = scan_intensity / total
    metadata["normalization"] = cfg.run.normalization
    metadata["detector_width"] = cfg.detector.width
    metadata["scan_step"] = cfg.detector.step
    return DiffractionPattern(positions=scan_x, intensity=scan_intensity, metadata=metadata)


def ensemble_pattern(cfg: "SimulationConfig") -> DiffractionPattern:
    """Full ensemble-averaged detector-plane pattern for a configuration.

    Deterministic: quadrature results are reduced in a fixed order no
    matter how many workers compute them, so identical configs give
    bit-identical patterns.  When ``cfg.run.convergence_check`` is set the
    quadrature axes are doubled one at a time and the RMS pattern change
    is recorded in ``metadata["convergence"]`` (warning above 1%).
    """
    pattern = _ensemble_once(cfg)
    if not cfg.run.convergence_check:
        return pattern
    from .config import QuadratureSpec  # deferred: avoids import cycle at module load

    quad = cfg.quadrature
    changes = {}
    for axis in ("velocity_nodes", "vertical_nodes", "source_nodes"):
        doubled = replace(
            cfg,
            quadrature=QuadratureSpec(
                **{
                    name: getattr(quad, name) * (2 if name == axis else 1)
                    for name in ("velocity_nodes", "vertical_nodes", "source_nodes")
                }
            ),
            run=replace(cfg.run, convergence_check=False),
        )
        refined = _ensemble_once(doubled)
        scale = float(np.sqrt(np.mean(pattern.intensity**2)))
        rms = float(np.sqrt(np.mean((pattern.intensity - refined.intensity) ** 2)))
        changes[axis] = rms / scale if scale > 0.0 else 0.0
    worst = max(changes.values())
    pattern.metadata["convergence"] = {"rms_change": changes, "converged": worst <= 0.01}
    if worst > 0.01:
        warnings.warn(
            f"quadrature not converged: doubling changes the pattern by {worst:.2%} RMS",
            stacklevel=2,
        )
    return pattern


def _ensemble_once(cfg: "SimulationConfig") -> DiffractionPattern:
    v_nodes, v_weights = velocity_quadrature(cfg.velocity, cfg.quadrature.velocity_nodes)
    scales, scale_weights = vertical_phi_scales(cfg.vertical, cfg.quadrature.vertical_nodes)
    common_x = _internal_grid(cfg.geometry, cfg.detector.width, cfg.numerics.internal_step)
    phi_peak = compute_phi(cfg.species, cfg.beam, cfg.velocity.v_peak)
    metadata = {
        "mode": cfg.run.mode,
        "species": cfg.species.name,
        "power_w": cfg.beam.power,
        "v_peak": cfg.velocity.v_peak,
        "phi_re": phi_peak.re,
        "phi_im": phi_peak.im,
    }

    if cfg.run.mode == "orders":
        accumulated = np.zeros_like(common_x)
        phi_per_velocity = []
        total_weight = 0.0
        for velocity, v_weight in zip(v_nodes, v_weights):
            phi = compute_phi(cfg.species, cfg.beam, velocity)
            phi_per_velocity.append([float(velocity), phi.re, phi.im])
            slot = order_slot_spacing(cfg.species, float(velocity), cfg.beam, cfg.geometry)
            slot_weights: np.ndarray | None = None
            for scale, scale_weight in zip(scales, scale_weights):
                spectrum = incoherent_order_intensities(
                    phi.scaled(float(scale)), cfg.numerics.m_max, cfg.numerics.tail_eps
                )
                term = scale_weight * spectrum.intensities
                slot_weights = term if slot_weights is None else slot_weights + term
            assert slot_weights is not None
            for m, weight in zip(range(-cfg.numerics.m_max, cfg.numerics.m_max + 1), slot_weights):
                if weight > 0.0:
                    accumulated += v_weight * weight * geometric_envelope(
                        cfg.geometry, common_x - m * slot
                    )
            total_weight += v_weight * float(slot_weights.sum())
        metadata["phi_per_velocity"] = phi_per_velocity
        metadata["total_probability"] = total_weight
        metadata["scan_coverage"] = 1.0
        return _finalize(cfg, common_x, accumulated, metadata)

    grid, mask = grating_window(cfg.beam, cfg.geometry, cfg.numerics.samples_per_period)
    src_nodes, src_weights = source_quadrature(cfg.geometry, cfg.quadrature.source_nodes)

    def run_slice(velocity: float):
        return _wave_velocity_slice(
            cfg, float(velocity), grid, mask, scales, scale_weights, src_nodes, src_weights
        )

    if cfg.run.workers > 1:
        with ThreadPoolExecutor(max_workers=cfg.run.workers) as pool:
            slices = list(pool.map(run_slice, v_nodes))
    else:
        slices = [run_slice(v) for v in v_nodes]

    accumulated = np.zeros_like(common_x)
    phi_per_velocity = []
    total_probability = 0.0
    coverage = 0.0
    for (x_native, intensity, phi, power_in, in_span), velocity, v_weight in zip(
        slices, v_nodes, v_weights
    ):
        spacing_native = float(x_native[1] - x_native[0])
        accumulated += v_weight * np.interp(common_x, x_native, intensity, left=0.0, right=0.0)
        total_probability += v_weight * float(intensity.sum() * spacing_native) / power_in
        coverage += v_weight * in_span
        phi_per_velocity.append([float(velocity), phi.re, phi.im])
    metadata["phi_per_velocity"] = phi_per_velocity
    metadata["total_probability"] = total_probability
    metadata["scan_coverage"] = coverage
    metadata["grating_samples"] = grid.size
    metadata["fft_length"] = next_pow2(grid.size * cfg.numerics.pad_factor)
    return _finalize(cfg, common_x, accumulated, metadata)


def pattern_metrics(pattern: DiffractionPattern, spacing: float) -> PatternMetrics:
    """Window-integrated efficiencies on the momentum-slot ladder.

    Windows of width ``spacing`` are centred on every multiple of
    ``spacing`` that fits the scan; efficiency is window counts over total
    counts (normalization-independent).  Visibility is (max-min)/(max+min)
    over the central two slots.
    """
    if not spacing > 0.0:
        raise ValueError("spacing must be positive")
    detector_width = float(pattern.metadata.get("detector_width", 0.0))
    if spacing < detector_width:
        raise ValueError(
            f"metric windows ({spacing * 1e6:.2f} um) narrower than the detector "
            f"resolution ({detector_width * 1e6:.2f} um) would overlap"
        )
    positions = pattern.positions
    intensity = pattern.intensity
    total = float(intensity.sum())
    if total <= 0.0:
        raise ValueError("pattern carries no intensity")
    half_extent = float(positions[-1])
    m_limit = int(math.floor((half_extent + 0.5 * pattern.step - 0.5 * spacing) / spacing))
    efficiencies: dict[int, float] = {}
    for m in range(-m_limit, m_limit + 1):
        center = m * spacing
        window = (positions >= center - 0.5 * spacing) & (positions < center + 0.5 * spacing)
        efficiencies[m] = float(intensity[window].sum()) / total
    central = np.abs(positions) <= 2.0 * spacing
    region = intensity[central]
    high, low = float(region.max()), float(region.min())
    visibility = (high - low) / (high + low) if high + low > 0.0 else 0.0
    return PatternMetrics(efficiencies=efficiencies, visibility=visibility, window=spacing)


def peak_positions(
    pattern: DiffractionPattern, spacing: float, min_efficiency: float = 0.02
) -> dict[int, float]:
    """Sub-grid peak centres near each momentum slot that carries weight.

    A slot is reported only when its window holds a genuine local maximum
    (the in-window argmax is interior, not pinned at a window edge): a
    weak order riding on the flank of a stronger neighbour is a shoulder,
    not a peak.  Centres are refined by quadratic interpolation through
    the three samples around the maximum; slots below ``min_efficiency``
    are omitted.
    """
    metrics = pattern_metrics(pattern, spacing)
    positions = pattern.positions
    intensity = pattern.intensity
    step = pattern.step
    peaks: dict[int, float] = {}
    for m, efficiency in metrics.efficiencies.items():
        if efficiency < min_efficiency:
            continue
        center = m * spacing
        window = np.where(
            (positions >= center - 0.5 * spacing) & (positions < center + 0.5 * spacing)
        )[0]
        if window.size < 3:
            continue
        peak_idx = int(window[np.argmax(intensity[window])])
        if peak_idx in (int(window[0]), int(window[-1])):
            continue
        left, mid, right = intensity[peak_idx - 1 : peak_idx + 2]
        denom = left - 2.0 * mid + right
        offset = 0.5 * (left - right) / denom if denom != 0.0 else 0.0
        peaks[m] = float(positions[peak_idx] + np.clip(offset, -1.0, 1.0) * step)
    return peaks


def compare_patterns(a: DiffractionPattern, b: DiffractionPattern) -> tuple[float, float]:
    """Best integer-step alignment shift of b onto a, and residual NRMSE.

    Both patterns are peak-normalized first, so uniform scaling changes
    nothing.  The returned shift is the displacement of ``b`` relative to
    ``a`` (positive when b's features sit at larger x), a whole multiple
    of the common grid step.
    """
    if a.positions.size == 0 or b.positions.size == 0:
        raise ValueError("cannot compare empty patterns")
    if abs(a.step - b.step) > 1e-9 * max(a.step, b.step):
        raise ValueError(
            f"grid steps differ: {a.step * 1e6:.3f} um vs {b.step * 1e6:.3f} um"
        )
    a_peak = float(a.intensity.max())
    b_peak = float(b.intensity.max())
    if a_peak <= 0.0 or b_peak <= 0.0:
        raise ValueError("cannot compare patterns without intensity")
    a_n = a.intensity / a_peak
    b_n = b.intensity / b_peak
    la, lb = a_n.size, b_n.size
    best_score = -np.inf
    best_shift = 0
    for shift in range(-lb + 1, la):
        a_lo, b_lo = max(0, shift), max(0, -shift)
        length = min(la - a_lo, lb - b_lo)
        if length < 1:
            continue
        score = float(np.dot(a_n[a_lo : a_lo + length], b_n[b_lo : b_lo + length]))
        if score > best_score + 1e-15 or (
            abs(score - best_score) <= 1e-15 and abs(shift) < abs(best_shift)
        ):
            best_score = score
            best_shift = shift
    a_lo, b_lo = max(0, best_shift), max(0, -best_shift)
    length = min(la - a_lo, lb - b_lo)
    residual = a_n[a_lo : a_lo + length] - b_n[b_lo : b_lo + length]
    nrmse = float(np.sqrt(np.mean(residual**2)))
    return -best_shift * a.step, nrmse

"""Velocity spread, vertical beam overlap, detector resolution.

Everything here produces deterministic quadrature nodes and weights — no
Monte Carlo — so downstream ensemble averages are bit-reproducible.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

# FWHM of a Gaussian = FWHM_TO_SIGMA * sigma
FWHM_TO_SIGMA = 2.0 * math.sqrt(2.0 * math.log(2.0))
# Quadrature windows span this many FWHM either side of the centre.
SPAN_FWHM = 2.5


@dataclass(frozen=True)
class VelocityDistribution:
    """Forward-velocity distribution of the molecular beam.

    The default shape is a Gaussian parameterised by the most probable
    velocity and the relative FWHM spread.  A measured histogram (two
    columns: velocity, relative weight) can be supplied instead; it is then
    used verbatim as the quadrature rule.
    """

    v_peak: float = 120.0
    fwhm_ratio: float = 0.17
    shape: str = "gaussian"
    histogram: tuple[tuple[float, ...], tuple[float, ...]] | None = None

    def __post_init__(self) -> None:
        if not self.v_peak > 0.0:
            raise ValueError("v_peak must be positive")
        if not 0.0 < self.fwhm_ratio < 1.0:
            raise ValueError("fwhm_ratio must be in (0, 1)")
        if self.shape not in ("gaussian", "histogram"):
            raise ValueError(f"unknown velocity shape {self.shape!r}")
        if self.shape == "histogram" and self.histogram is None:
            raise ValueError("histogram shape requires tabulated data")


@dataclass(frozen=True)
class VerticalProfile:
    """Vertical extent of the molecular beam against the laser profile."""

    beam_fwhm: float = 625e-6
    laser_waist: float = 1.3e-3

    def __post_init__(self) -> None:
        if not (self.beam_fwhm > 0.0 and self.laser_waist > 0.0):
            raise ValueError("profile widths must be positive")


@dataclass(frozen=True)
class DetectorModel:
    """Detection resolution (FWHM) and scan step."""

    width: float = 6e-6
    step: float = 2e-6
    kernel_shape: str = "gaussian"

    def __post_init__(self) -> None:
        if self.width < 0.0:
            raise ValueError("width must be >= 0")
        if not self.step > 0.0:
            raise ValueError("step must be positive")
        if self.kernel_shape not in ("gaussian", "tophat"):
            raise ValueError(f"unknown kernel shape {self.kernel_shape!r}")


def _midpoint_cells(lo: float, hi: float, n: int) -> np.ndarray:
    width = (hi - lo) / n
    return lo + (np.arange(n) + 0.5) * width


def velocity_quadrature(
    dist: VelocityDistribution, n_nodes: int
) -> tuple[np.ndarray, np.ndarray]:
    """Deterministic nodes and unit-sum weights over the velocity spread.

    Gaussian shape: midpoint cells spanning +-2.5 FWHM around v_peak,
    truncated at v > 0, weighted by the distribution value.  Histogram
    shape: the tabulated rows are the rule and ``n_nodes`` is ignored.
    """
    if n_nodes < 1:
        raise ValueError("n_nodes must be >= 1")
    if dist.shape == "histogram":
        assert dist.histogram is not None
        nodes = np.asarray(dist.histogram[0], dtype=np.float64)
        weights = np.asarray(dist.histogram[1], dtype=np.float64)
        return nodes, weights / weights.sum()
    half_span = SPAN_FWHM * dist.fwhm_ratio * dist.v_peak
    lo = max(dist.v_peak - half_span, 1e-3 * dist.v_peak)
    hi = dist.v_peak + half_span
    nodes = _midpoint_cells(lo, hi, n_nodes)
    sigma = dist.fwhm_ratio * dist.v_peak / FWHM_TO_SIGMA
    weights = np.exp(-0.5 * ((nodes - dist.v_peak) / sigma) ** 2)
    return nodes, weights / weights.sum()


def vertical_phi_scales(
    profile: VerticalProfile, n_nodes: int
) -> tuple[np.ndarray, np.ndarray]:
    """Intensity scale factors sampled over the beam's vertical extent.

    Molecules at height y see the laser intensity reduced by
    exp(-2 y^2 / w_y^2); the complex grating phase scales by the same
    factor.  Returns (scales, weights) with unit-sum weights over midpoint
    cells spanning +-2.5 FWHM of the vertical beam profile.
    """
    if n_nodes < 1:
        raise ValueError("n_nodes must be >= 1")
    half_span = SPAN_FWHM * profile.beam_fwhm
    y = _midpoint_cells(-half_span, half_span, n_nodes)
    sigma = profile.beam_fwhm / FWHM_TO_SIGMA
    weights = np.exp(-0.5 * (y / sigma) ** 2)
    scales = np.exp(-2.0 * (y / profile.laser_waist) ** 2)
    return scales, weights / weights.sum()


def mean_vertical_scale(profile: VerticalProfile) -> float:
    """Closed-form average of exp(-2 y^2/w^2) over the vertical Gaussian.

    Equals 1/sqrt(1 + 4 sigma_y^2 / w_y^2); used as a convergence oracle
    for ``vertical_phi_scales``.
    """
    sigma = profile.beam_fwhm / FWHM_TO_SIGMA
    return 1.0 / math.sqrt(1.0 + 4.0 * sigma**2 / profile.laser_waist**2)


def detector_kernel(model: DetectorModel, grid_step: float) -> np.ndarray:
    """Odd-length unit-sum convolution kernel for the detector resolution.

    A resolution narrower than the grid step degenerates to a single tap.
    """
    if not grid_step > 0.0:
        raise ValueError("grid_step must be positive")
    if model.width < grid_step:
        return np.array([1.0])
    if model.kernel_shape == "gaussian":
        sigma = model.width / FWHM_TO_SIGMA
        half = int(math.ceil(3.0 * sigma / grid_step))
        offsets = np.arange(-half, half + 1) * grid_step
        taps = np.exp(-0.5 * (offsets / sigma) ** 2)
    else:  # tophat: fractional overlap of each grid cell with the slit
        half_width = 0.5 * model.width
        half = int(math.ceil((half_width + 0.5 * grid_step) / grid_step))
        offsets = np.arange(-half, half + 1) * grid_step
        lo = np.maximum(offsets - 0.5 * grid_step, -half_width)
        hi = np.minimum(offsets + 0.5 * grid_step, half_width)
        taps = np.maximum(hi - lo, 0.0)
    return taps / taps.sum()


def load_velocity_histogram(path: str | Path) -> VelocityDistribution:
    """Read a two-column (velocity m/s, relative weight) text file."""
    data = np.loadtxt(path, dtype=np.float64, ndmin=2)
    if data.ndim != 2 or data.shape[1] != 2:
        raise ValueError("histogram file must have exactly two columns")
    v, w = data[:, 0], data[:, 1]
    if not np.all(v > 0.0):
        raise ValueError("histogram velocities must be positive")
    if np.any(w < 0.0) or w.sum() <= 0.0:
        raise ValueError("histogram weights must be nonnegative with positive sum")
    order = np.argsort(v)
    v, w = v[order], w[order]
    v_peak = float(v[np.argmax(w)])
    return VelocityDistribution(
        v_peak=v_peak,
        shape="histogram",
        histogram=(tuple(float(x) for x in v), tuple(float(x) for x in w)),
    )

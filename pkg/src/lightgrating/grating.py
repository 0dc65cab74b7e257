"""The standing-light-wave grating: phase imprint and absorption channels.

A retro-reflected laser beam forms a standing wave with intensity period
half the laser wavelength.  A polarizable molecule crossing it picks up a
position-dependent dipole phase; the imaginary part of the polarizability
makes it absorb photons at a position-dependent Poisson rate.  Molecules
that absorbed exactly ``n`` photons form an independent subensemble with
its own transmission function; these are the "channels" below.

The grating is treated as thin (Raman-Nath regime): it acts purely as a
multiplicative transmission function on the incoming matter wave.  The
``raman_nath_diagnostic`` operation estimates how well that assumption
holds for a given configuration.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import backend
from .species import C_LIGHT, EPS0, HBAR, MoleculeSpecies

# Absorption channels are truncated at this photon number no matter how
# weak the requested tail is; it bounds the work for extreme configs.
MAX_PHOTON_ORDER = 12
DEFAULT_TAIL_EPS = 1e-10


@dataclass(frozen=True)
class GratingBeam:
    """Standing-wave laser parameters.

    Parameters
    ----------
    wavelength : float
        Laser wavelength in metres.  The intensity period is half this.
    power : float
        Power of the running wave in watts, >= 0.
    waist_y : float
        1/e^2 intensity radius along the (vertical) molecular beam height, m.
    waist_z : float
        1/e^2 intensity radius along the flight direction, m.  Sets the
        transit time used by the thin-grating diagnostic.
    """

    wavelength: float = 514.5e-9
    power: float = 9.5
    waist_y: float = 1.3e-3
    waist_z: float = 50e-6

    def __post_init__(self) -> None:
        if not self.wavelength > 0.0:
            raise ValueError("wavelength must be positive")
        if self.power < 0.0:
            raise ValueError("power must be >= 0")
        if not (self.waist_y > 0.0 and self.waist_z > 0.0):
            raise ValueError("waists must be positive")

    @property
    def k_laser(self) -> float:
        """Wavenumber 2*pi/lambda in 1/m."""
        return 2.0 * math.pi / self.wavelength

    @property
    def period(self) -> float:
        """Grating (intensity) period lambda/2 in metres."""
        return 0.5 * self.wavelength


@dataclass(frozen=True)
class ComplexPhase:
    """The complex phase parameter Phi of the grating.

    ``re`` is the peak dipole phase; ``im`` drives absorption (the mean
    photon number at an antinode is ``4*im``, the spatial average ``2*im``).
    """

    re: float
    im: float

    def __post_init__(self) -> None:
        if self.im < 0.0:
            raise ValueError("Im(Phi) must be >= 0 for a passive grating")

    @property
    def as_complex(self) -> complex:
        return complex(self.re, self.im)

    def scaled(self, factor: float) -> "ComplexPhase":
        """Phi for a reduced local intensity (e.g. off the beam axis)."""
        return ComplexPhase(self.re * factor, self.im * factor)


@dataclass(frozen=True)
class GridSpec:
    """Midpoint sampling grid over an integer number of grating periods.

    The window is centred on an intensity antinode and spans
    ``periods * wavelength/2``; samples sit at cell midpoints so that the
    field nodes (where the sign of cos flips) fall exactly on cell
    boundaries, never on samples.

    ``periods`` must be even so the window is also commensurate with the
    full laser wavelength -- the period of the odd diffraction harmonics.
    ``samples_per_period`` must be a multiple of 4 so nodes and antinodes
    align with the cell structure.
    """

    periods: int = 2
    samples_per_period: int = 1024
    wavelength: float = 514.5e-9

    def __post_init__(self) -> None:
        if self.periods < 2 or self.periods % 2 != 0:
            raise ValueError("periods must be an even integer >= 2")
        if self.samples_per_period < 4 or self.samples_per_period % 4 != 0:
            raise ValueError("samples_per_period must be a multiple of 4")
        if not self.wavelength > 0.0:
            raise ValueError("wavelength must be positive")

    @property
    def period(self) -> float:
        return 0.5 * self.wavelength

    @property
    def size(self) -> int:
        return self.periods * self.samples_per_period

    @property
    def spacing(self) -> float:
        return self.period / self.samples_per_period

    @property
    def window(self) -> float:
        return self.periods * self.period

    def positions(self) -> np.ndarray:
        n = self.size
        return (np.arange(n) + 0.5) * self.spacing - 0.5 * self.window


@dataclass(frozen=True)
class TransmissionChannel:
    """Sampled transmission amplitude for the n-photon subensemble."""

    photon_count: int
    samples: np.ndarray
    grid: GridSpec


def compute_phi(species: MoleculeSpecies, beam: GratingBeam, velocity: float) -> ComplexPhase:
    """Complex phase parameter for a molecule crossing the standing wave.

    Phi = sqrt(2/pi) * P * alpha / (hbar c eps0 w_y v), with alpha the
    complex SI polarizability.  The real part is the peak dipole phase of
    the ``exp(2i Re(Phi) cos^2(kx))`` imprint; the imaginary part sets the
    photon absorption rate.

    Parameters
    ----------
    species : MoleculeSpecies
    beam : GratingBeam
    velocity : float
        Forward molecular velocity in m/s, > 0.
    """
    if not velocity > 0.0:
        raise ValueError("velocity must be positive")
    alpha = species.polarizability.si
    scale = math.sqrt(2.0 / math.pi) * beam.power / (
        HBAR * C_LIGHT * EPS0 * beam.waist_y * velocity
    )
    return ComplexPhase(scale * alpha.real, scale * alpha.imag)


def mean_photon_number(phi: ComplexPhase, x, k_laser: float):
    """Mean number of absorbed photons at transverse position x.

    nbar(x) = 4 * Im(Phi) * cos^2(k x).  Accepts scalars or arrays.
    """
    c = np.cos(k_laser * np.asarray(x, dtype=np.float64))
    out = 4.0 * phi.im * c * c
    return float(out) if out.ndim == 0 else out


def poisson_weight(nbar, n: int):
    """Poisson probability of exactly n events at mean nbar (vectorised).

    Returns exp(-nbar) * nbar^n / n!, with the nbar -> 0 limit handled
    exactly (1 for n = 0, else 0).
    """
    if n < 0 or n != int(n):
        raise ValueError("photon number must be a non-negative integer")
    nbar_arr = np.asarray(nbar, dtype=np.float64)
    if np.any(nbar_arr < 0.0):
        raise ValueError("mean photon number must be >= 0")
    if n == 0:
        out = np.exp(-nbar_arr)
    else:
        with np.errstate(divide="ignore"):
            logp = n * np.log(nbar_arr) - nbar_arr - math.lgamma(n + 1)
        out = np.where(nbar_arr > 0.0, np.exp(logp), 0.0)
    return float(out) if out.ndim == 0 else out


def truncation_order(phi: ComplexPhase, tail_eps: float = DEFAULT_TAIL_EPS) -> int:
    """Smallest photon number N so the Poisson tail beyond N is < tail_eps.

    Evaluated at the antinode mean ``4*Im(Phi)`` (the worst case over x)
    and capped at ``MAX_PHOTON_ORDER``.
    """
    if not tail_eps > 0.0:
        raise ValueError("tail_eps must be positive")
    nbar = 4.0 * phi.im
    if nbar == 0.0:
        return 0
    cumulative = 0.0
    for n in range(MAX_PHOTON_ORDER + 1):
        cumulative += poisson_weight(nbar, n)
        if 1.0 - cumulative < tail_eps:
            return n
    return MAX_PHOTON_ORDER


def channel_amplitudes(
    phi: ComplexPhase, n_max: int, k_laser: float, x: np.ndarray
) -> np.ndarray:
    """Transmission amplitudes t_n(x) for n = 0 .. n_max, shape (n_max+1, len(x)).

    t_n combines the dipole phase imprint exp(2i Re(Phi) cos^2(kx)), the
    square root of the Poisson weight at the local mean photon number, and
    one factor sign(cos kx) per absorbed photon (the photon recoil phase).
    The sign factors merge with |cos|^n from the Poisson weight into a
    plain cos^n, so each channel is smooth and exactly periodic.
    """
    if n_max < 0:
        raise ValueError("n_max must be >= 0")
    return backend.sample_channels(phi.re, phi.im, n_max, k_laser, np.asarray(x, dtype=np.float64))


def channel_transmission(phi: ComplexPhase, n: int, grid: GridSpec) -> TransmissionChannel:
    """Sampled n-photon transmission function on the given grid."""
    if n < 0:
        raise ValueError("photon number must be >= 0")
    k_laser = 2.0 * math.pi / grid.wavelength
    samples = channel_amplitudes(phi, n, k_laser, grid.positions())[n]
    return TransmissionChannel(n, samples, grid)


def channel_set(
    phi: ComplexPhase, grid: GridSpec, tail_eps: float = DEFAULT_TAIL_EPS
) -> list[TransmissionChannel]:
    """All channels up to the truncation order for the requested tail."""
    n_max = truncation_order(phi, tail_eps)
    k_laser = 2.0 * math.pi / grid.wavelength
    amps = channel_amplitudes(phi, n_max, k_laser, grid.positions())
    return [TransmissionChannel(n, amps[n], grid) for n in range(n_max + 1)]


@dataclass(frozen=True)
class RamanNathCheck:
    """Result of the thin-grating validity estimate."""

    ratio: float  # transverse displacement over one grating period
    displacement: float  # metres
    warn: bool


def raman_nath_diagnostic(
    species: MoleculeSpecies,
    beam: GratingBeam,
    velocity: float,
    phi: ComplexPhase,
) -> RamanNathCheck:
    """Estimate the transverse displacement during transit.

    A molecule kicked by Delta_p = 2 hbar k * max(1, |Phi|) during a transit
    time tau = 2 w_z / v drifts sideways by delta = Delta_p tau / (2 M).
    The grating is safely thin while delta is a small fraction of the
    grating period; the warning flag trips above ratio 0.1.
    """
    if not velocity > 0.0:
        raise ValueError("velocity must be positive")
    kick = 2.0 * HBAR * beam.k_laser * max(1.0, abs(phi.as_complex))
    transit = 2.0 * beam.waist_z / velocity
    displacement = kick * transit / (2.0 * species.mass_kg)
    ratio = displacement / beam.period
    return RamanNathCheck(ratio=ratio, displacement=displacement, warn=ratio > 0.1)

"""Config file parsing, validation, and canonical serialization.

The format is flat-sectioned INI.  Every key has a default equal to the
reference apparatus value, so an empty file is a complete, valid
configuration.  Unknown sections or keys are fatal errors carrying the
offending line number: a no-free-parameter model deserves loud config
mistakes, not silently ignored typos.
"""

from __future__ import annotations

import configparser
import hashlib
import io
import math
from dataclasses import dataclass, field, replace
from decimal import Decimal, InvalidOperation
from pathlib import Path

from .beamline import BeamlineGeometry
from .distributions import (
    DetectorModel,
    VelocityDistribution,
    VerticalProfile,
    load_velocity_histogram,
)
from .grating import GratingBeam
from .species import CATALOG, ComplexPolarizability, MoleculeSpecies


class ConfigError(ValueError):
    """Invalid configuration: carries the key path and line number."""

    def __init__(self, message: str, key: str | None = None, line: int | None = None):
        self.key = key
        self.line = line
        prefix = ""
        if key is not None:
            prefix = f"{key} (line {line}): " if line is not None else f"{key}: "
        super().__init__(prefix + message)


@dataclass(frozen=True)
class QuadratureSpec:
    velocity_nodes: int = 16
    vertical_nodes: int = 16
    source_nodes: int = 16


@dataclass(frozen=True)
class NumericsSpec:
    samples_per_period: int = 64
    pad_factor: int = 4
    tail_eps: float = 1e-10
    m_max: int = 20
    internal_step: float = 0.25e-6


@dataclass(frozen=True)
class RunSpec:
    mode: str = "wave"
    normalization: str = "sum"
    workers: int = 1
    convergence_check: bool = False
    out_dir: str = "."
    prefix: str = "run"


@dataclass(frozen=True)
class SimulationConfig:
    species: MoleculeSpecies = field(default_factory=lambda: CATALOG["C60"])
    beam: GratingBeam = field(default_factory=GratingBeam)
    geometry: BeamlineGeometry = field(default_factory=BeamlineGeometry)
    velocity: VelocityDistribution = field(default_factory=VelocityDistribution)
    vertical: VerticalProfile = field(default_factory=VerticalProfile)
    detector: DetectorModel = field(default_factory=DetectorModel)
    quadrature: QuadratureSpec = field(default_factory=QuadratureSpec)
    numerics: NumericsSpec = field(default_factory=NumericsSpec)
    run: RunSpec = field(default_factory=RunSpec)
    velocity_histogram_file: str | None = None


def _parse_float(raw: str) -> float:
    try:
        value = float(raw)
    except ValueError:
        raise ValueError(f"not a number: {raw!r}")
    if not math.isfinite(value):
        raise ValueError(f"not finite: {raw!r}")
    return value


def _scaled(exponent: int):
    """Parser for a unit-scaled float key (config units = SI * 10^-exponent).

    The exponent shift happens in decimal, so the result is the correctly
    rounded double of the SI quantity: '50' um parses to exactly the same
    float as the literal 50e-6, with no multiply rounding.
    """

    def parse(raw: str) -> float:
        try:
            value = float(Decimal(raw).scaleb(exponent))
        except (InvalidOperation, ValueError, ArithmeticError):
            raise ValueError(f"not a number: {raw!r}")
        if not math.isfinite(value):
            raise ValueError(f"not finite: {raw!r}")
        return value

    return parse


def _fmt_scaled(value_si: float, exponent: int) -> str:
    """Inverse of ``_scaled``: a config-unit string that parses back to
    exactly ``value_si`` (repr is exact and the shift is decimal)."""
    return format(Decimal(repr(value_si)).scaleb(exponent), "f")


def _parse_int(raw: str) -> int:
    try:
        return int(raw, 10)
    except ValueError:
        raise ValueError(f"not an integer: {raw!r}")


def _parse_bool(raw: str) -> bool:
    lowered = raw.strip().lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {raw!r}")


def _positive(name: str, value):
    if not value > 0:
        raise ValueError(f"{name} must be > 0")
    return value


def _nonnegative(name: str, value):
    if value < 0:
        raise ValueError(f"{name} must be >= 0")
    return value


def _choice(name: str, value: str, allowed: tuple[str, ...]) -> str:
    if value not in allowed:
        raise ValueError(f"{name} must be one of {', '.join(allowed)}")
    return value


# section -> set of keys the parser accepts; anything else is fatal.
_SCHEMA: dict[str, tuple[str, ...]] = {
    "species": ("name", "mass_amu", "alpha_re_a3", "alpha_im_a3"),
    "beam": ("wavelength_nm", "power_w", "waist_y_mm", "waist_z_um"),
    "geometry": ("slit1_um", "slit2_um", "l12_m", "l2d_m", "detector_span_um"),
    "velocity": ("v_peak", "fwhm_ratio", "histogram_file"),
    "vertical": ("beam_fwhm_um",),
    "detector": ("width_um", "step_um", "kernel"),
    "quadrature": ("velocity_nodes", "vertical_nodes", "source_nodes"),
    "numerics": ("samples_per_period", "pad_factor", "tail_eps", "m_max", "internal_step_um"),
    "run": ("mode", "normalization", "workers", "convergence_check", "out_dir", "prefix"),
}


def _line_map(text: str) -> dict[tuple[str | None, str], int]:
    """Map (section, key) pairs to 1-based line numbers for error reports."""
    out: dict[tuple[str | None, str], int] = {}
    section: str | None = None
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith(("#", ";")):
            continue
        if stripped.startswith("[") and stripped.endswith("]"):
            section = stripped[1:-1].strip()
            out[(None, section)] = lineno
        elif "=" in line:
            key = line.split("=", 1)[0].strip().lower()
            out[(section, key)] = lineno
    return out


def parse_config(text: str, base_dir: str | Path | None = None) -> SimulationConfig:
    """Parse and validate a configuration, applying apparatus defaults.

    ``base_dir`` anchors relative paths referenced by the config (the
    velocity histogram file); it defaults to the working directory.
    """
    parser = configparser.ConfigParser(
        delimiters=("=",),
        comment_prefixes=("#", ";"),
        inline_comment_prefixes=("#", ";"),
        strict=True,
        interpolation=None,
    )
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(str(exc)) from exc
    lines = _line_map(text)

    for section in parser.sections():
        if section not in _SCHEMA:
            raise ConfigError(
                f"unknown section [{section}]", key=section, line=lines.get((None, section))
            )
        for key in parser[section]:
            if key not in _SCHEMA[section]:
                raise ConfigError(
                    "unknown key", key=f"{section}.{key}", line=lines.get((section, key))
                )

    def fetch(section: str, key: str, convert, default):
        if not parser.has_option(section, key):
            return default
        raw = parser.get(section, key)
        try:
            return convert(raw)
        except ValueError as exc:
            raise ConfigError(
                str(exc), key=f"{section}.{key}", line=lines.get((section, key))
            ) from exc

    def checked(section: str, key: str, value, validator):
        try:
            return validator(f"{section}.{key}", value)
        except ValueError as exc:
            raise ConfigError(
                str(exc), key=f"{section}.{key}", line=lines.get((section, key))
            ) from exc

    # --- species ------------------------------------------------------
    name = fetch("species", "name", str.strip, "C60")
    mass = fetch("species", "mass_amu", _parse_float, None)
    alpha_re = fetch("species", "alpha_re_a3", _parse_float, None)
    alpha_im = fetch("species", "alpha_im_a3", _parse_float, None)
    custom_fields = {"mass_amu": mass, "alpha_re_a3": alpha_re, "alpha_im_a3": alpha_im}
    given = {k: v for k, v in custom_fields.items() if v is not None}
    if given:
        missing = [k for k, v in custom_fields.items() if v is None]
        if missing:
            raise ConfigError(
                f"custom species needs {', '.join(missing)} as well",
                key="species." + next(iter(given)),
                line=lines.get(("species", next(iter(given)))),
            )
        checked("species", "mass_amu", mass, _positive)
        checked("species", "alpha_im_a3", alpha_im, _nonnegative)
        species = MoleculeSpecies(name, mass, ComplexPolarizability(alpha_re, alpha_im))
    else:
        if name not in CATALOG:
            raise ConfigError(
                f"unknown species {name!r}; catalog has {', '.join(sorted(CATALOG))} "
                "(or define mass_amu/alpha_re_a3/alpha_im_a3 inline)",
                key="species.name",
                line=lines.get(("species", "name")),
            )
        species = CATALOG[name]

    # --- beam ---------------------------------------------------------
    beam = GratingBeam(
        wavelength=checked(
            "beam", "wavelength_nm", fetch("beam", "wavelength_nm", _scaled(-9), 514.5e-9), _positive
        ),
        power=checked("beam", "power_w", fetch("beam", "power_w", _parse_float, 9.5), _nonnegative),
        waist_y=checked(
            "beam", "waist_y_mm", fetch("beam", "waist_y_mm", _scaled(-3), 1.3e-3), _positive
        ),
        waist_z=checked(
            "beam", "waist_z_um", fetch("beam", "waist_z_um", _scaled(-6), 50e-6), _positive
        ),
    )

    # --- geometry -----------------------------------------------------
    geometry = BeamlineGeometry(
        slit1=checked("geometry", "slit1_um", fetch("geometry", "slit1_um", _scaled(-6), 7e-6), _positive),
        slit2=checked("geometry", "slit2_um", fetch("geometry", "slit2_um", _scaled(-6), 5e-6), _positive),
        L12=checked("geometry", "l12_m", fetch("geometry", "l12_m", _parse_float, 1.13), _positive),
        L2D=checked("geometry", "l2d_m", fetch("geometry", "l2d_m", _parse_float, 1.2), _positive),
        detector_span=checked(
            "geometry",
            "detector_span_um",
            fetch("geometry", "detector_span_um", _scaled(-6), 300e-6),
            _positive,
        ),
    )

    # --- velocity -----------------------------------------------------
    v_peak = checked("velocity", "v_peak", fetch("velocity", "v_peak", _parse_float, 120.0), _positive)
    fwhm_ratio = fetch("velocity", "fwhm_ratio", _parse_float, 0.17)
    if not 0.0 < fwhm_ratio < 1.0:
        raise ConfigError(
            "velocity.fwhm_ratio must be in (0, 1)",
            key="velocity.fwhm_ratio",
            line=lines.get(("velocity", "fwhm_ratio")),
        )
    histogram_file = fetch("velocity", "histogram_file", str.strip, None)
    if histogram_file:
        path = Path(histogram_file)
        if not path.is_absolute():
            path = Path(base_dir or ".") / path
        try:
            velocity = load_velocity_histogram(path)
        except (OSError, ValueError) as exc:
            raise ConfigError(
                str(exc),
                key="velocity.histogram_file",
                line=lines.get(("velocity", "histogram_file")),
            ) from exc
        velocity = replace(velocity, fwhm_ratio=fwhm_ratio)
    else:
        histogram_file = None
        velocity = VelocityDistribution(v_peak=v_peak, fwhm_ratio=fwhm_ratio)

    # --- vertical -----------------------------------------------------
    vertical = VerticalProfile(
        beam_fwhm=checked(
            "vertical", "beam_fwhm_um", fetch("vertical", "beam_fwhm_um", _scaled(-6), 625e-6), _positive
        ),
        laser_waist=beam.waist_y,
    )

    # --- detector -----------------------------------------------------
    detector = DetectorModel(
        width=checked(
            "detector", "width_um", fetch("detector", "width_um", _scaled(-6), 6e-6), _nonnegative
        ),
        step=checked("detector", "step_um", fetch("detector", "step_um", _scaled(-6), 2e-6), _positive),
        kernel_shape=checked(
            "detector",
            "kernel",
            fetch("detector", "kernel", str.strip, "gaussian"),
            lambda n, v: _choice(n, v, ("gaussian", "tophat")),
        ),
    )

    # --- quadrature ---------------------------------------------------
    quadrature = QuadratureSpec(
        velocity_nodes=checked(
            "quadrature",
            "velocity_nodes",
            fetch("quadrature", "velocity_nodes", _parse_int, 16),
            _positive,
        ),
        vertical_nodes=checked(
            "quadrature",
            "vertical_nodes",
            fetch("quadrature", "vertical_nodes", _parse_int, 16),
            _positive,
        ),
        source_nodes=checked(
            "quadrature",
            "source_nodes",
            fetch("quadrature", "source_nodes", _parse_int, 16),
            _positive,
        ),
    )

    # --- numerics -----------------------------------------------------
    spp = checked(
        "numerics",
        "samples_per_period",
        fetch("numerics", "samples_per_period", _parse_int, 64),
        _positive,
    )
    if spp % 4 != 0:
        raise ConfigError(
            "numerics.samples_per_period must be a multiple of 4",
            key="numerics.samples_per_period",
            line=lines.get(("numerics", "samples_per_period")),
        )
    tail_eps = fetch("numerics", "tail_eps", _parse_float, 1e-10)
    if not 0.0 < tail_eps < 1.0:
        raise ConfigError(
            "numerics.tail_eps must be in (0, 1)",
            key="numerics.tail_eps",
            line=lines.get(("numerics", "tail_eps")),
        )
    numerics = NumericsSpec(
        samples_per_period=spp,
        pad_factor=checked(
            "numerics", "pad_factor", fetch("numerics", "pad_factor", _parse_int, 4), _positive
        ),
        tail_eps=tail_eps,
        m_max=checked("numerics", "m_max", fetch("numerics", "m_max", _parse_int, 20), _positive),
        internal_step=checked(
            "numerics",
            "internal_step_um",
            fetch("numerics", "internal_step_um", _scaled(-6), 0.25e-6),
            _positive,
        ),
    )

    # --- run ----------------------------------------------------------
    run = RunSpec(
        mode=checked(
            "run",
            "mode",
            fetch("run", "mode", str.strip, "wave"),
            lambda n, v: _choice(n, v, ("wave", "orders")),
        ),
        normalization=checked(
            "run",
            "normalization",
            fetch("run", "normalization", str.strip, "sum"),
            lambda n, v: _choice(n, v, ("sum", "peak")),
        ),
        workers=checked("run", "workers", fetch("run", "workers", _parse_int, 1), _positive),
        convergence_check=fetch("run", "convergence_check", _parse_bool, False),
        out_dir=fetch("run", "out_dir", str.strip, "."),
        prefix=fetch("run", "prefix", str.strip, "run"),
    )

    return SimulationConfig(
        species=species,
        beam=beam,
        geometry=geometry,
        velocity=velocity,
        vertical=vertical,
        detector=detector,
        quadrature=quadrature,
        numerics=numerics,
        run=run,
        velocity_histogram_file=histogram_file,
    )


def load_config_file(path: str | Path) -> SimulationConfig:
    path = Path(path)
    return parse_config(path.read_text(encoding="utf-8"), base_dir=path.parent)


def _fmt(value: float) -> str:
    return repr(float(value))


def serialize_config(cfg: SimulationConfig) -> str:
    """Canonical text form: every key explicit, fixed order, exact floats.

    ``parse_config(serialize_config(cfg))`` reproduces ``cfg`` exactly
    (float fields round-trip through repr); the serialization is also the
    content that the config digest hashes.
    """
    out = io.StringIO()

    def section(name: str, pairs: list[tuple[str, str]]) -> None:
        out.write(f"[{name}]\n")
        for key, value in pairs:
            out.write(f"{key} = {value}\n")
        out.write("\n")

    species_pairs = [("name", cfg.species.name)]
    if cfg.species.name not in CATALOG or CATALOG[cfg.species.name] != cfg.species:
        species_pairs += [
            ("mass_amu", _fmt(cfg.species.mass_amu)),
            ("alpha_re_a3", _fmt(cfg.species.polarizability.real_volume)),
            ("alpha_im_a3", _fmt(cfg.species.polarizability.imag_volume)),
        ]
    section("species", species_pairs)
    section(
        "beam",
        [
            ("wavelength_nm", _fmt_scaled(cfg.beam.wavelength, 9)),
            ("power_w", _fmt(cfg.beam.power)),
            ("waist_y_mm", _fmt_scaled(cfg.beam.waist_y, 3)),
            ("waist_z_um", _fmt_scaled(cfg.beam.waist_z, 6)),
        ],
    )
    section(
        "geometry",
        [
            ("slit1_um", _fmt_scaled(cfg.geometry.slit1, 6)),
            ("slit2_um", _fmt_scaled(cfg.geometry.slit2, 6)),
            ("l12_m", _fmt(cfg.geometry.L12)),
            ("l2d_m", _fmt(cfg.geometry.L2D)),
            ("detector_span_um", _fmt_scaled(cfg.geometry.detector_span, 6)),
        ],
    )
    velocity_pairs = [
        ("v_peak", _fmt(cfg.velocity.v_peak)),
        ("fwhm_ratio", _fmt(cfg.velocity.fwhm_ratio)),
    ]
    if cfg.velocity_histogram_file:
        velocity_pairs.append(("histogram_file", cfg.velocity_histogram_file))
    section("velocity", velocity_pairs)
    section("vertical", [("beam_fwhm_um", _fmt_scaled(cfg.vertical.beam_fwhm, 6))])
    section(
        "detector",
        [
            ("width_um", _fmt_scaled(cfg.detector.width, 6)),
            ("step_um", _fmt_scaled(cfg.detector.step, 6)),
            ("kernel", cfg.detector.kernel_shape),
        ],
    )
    section(
        "quadrature",
        [
            ("velocity_nodes", str(cfg.quadrature.velocity_nodes)),
            ("vertical_nodes", str(cfg.quadrature.vertical_nodes)),
            ("source_nodes", str(cfg.quadrature.source_nodes)),
        ],
    )
    section(
        "numerics",
        [
            ("samples_per_period", str(cfg.numerics.samples_per_period)),
            ("pad_factor", str(cfg.numerics.pad_factor)),
            ("tail_eps", _fmt(cfg.numerics.tail_eps)),
            ("m_max", str(cfg.numerics.m_max)),
            ("internal_step_um", _fmt_scaled(cfg.numerics.internal_step, 6)),
        ],
    )
    section(
        "run",
        [
            ("mode", cfg.run.mode),
            ("normalization", cfg.run.normalization),
            ("workers", str(cfg.run.workers)),
            ("convergence_check", "true" if cfg.run.convergence_check else "false"),
            ("out_dir", cfg.run.out_dir),
            ("prefix", cfg.run.prefix),
        ],
    )
    return out.getvalue()


def config_digest(cfg: SimulationConfig) -> str:
    """SHA-256 of the canonical serialization; stamped into outputs."""
    return hashlib.sha256(serialize_config(cfg).encode("utf-8")).hexdigest()

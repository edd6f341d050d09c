"""Element gain patterns: complex far-field response versus azimuth.

Each pattern maps azimuth (degrees, broadside = 0, valid over +/-90) to a
complex gain g(phi). Magnitudes are linear voltage gains relative to
isotropic; a pattern quoted at G dBi has |g| = 10**(G/20) at its peak.

Parametric surrogates (patch, vivaldi) use cosine-power main lobes with a
floor on the cosine argument so the dB form stays finite at the horizon.
Measured or vendor data enters through the tabulated kind.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

# floor for cosine factors inside dB expressions; keeps endfire finite
_COS_FLOOR = 1e-3
# internal grid for additive phase-noise realizations, degrees
_NOISE_GRID = np.arange(-90.0, 91.0)

TABLE_HEADER = "azimuth_deg,gain_dbi,phase_deg"


class PatternError(ValueError):
    """Invalid pattern parameters."""


class TableError(ValueError):
    """Malformed tabulated pattern data."""


@dataclass(frozen=True, eq=True)
class ElementPattern:
    """One element's complex gain model.

    kind: isotropic | dipole_ref | patch | vivaldi | tabulated.
    params: numeric shape/level parameters for parametric kinds.
    samples: (azimuth_deg, gain_dbi, phase_deg) rows for tabulated kind.
    phase_noise_deg: additive phase offsets on the internal 1-degree grid,
    attached by perturb(); None for a nominal pattern.
    """

    kind: str
    params: dict[str, float] = field(default_factory=dict)
    samples: tuple[tuple[float, float, float], ...] | None = None
    phase_noise_deg: tuple[float, ...] | None = None


@dataclass(frozen=True)
class PatternPerturbation:
    """Manufacturing-style deviations applied per element.

    phase_noise_std_deg: i.i.d. Gaussian phase error drawn on a 1-degree
    internal grid and linearly interpolated between grid points.
    param_tolerance: fractional bound; every shape parameter is scaled by
    an independent uniform draw in [1 - tol, 1 + tol].
    """

    phase_noise_std_deg: float = 0.0
    param_tolerance: float = 0.0

    def __post_init__(self):
        if self.phase_noise_std_deg < 0:
            raise PatternError("phase_noise_std_deg must be >= 0")
        if not 0.0 <= self.param_tolerance < 1.0:
            raise PatternError("param_tolerance must be in [0, 1)")


# parameters scaled by param_tolerance, per kind, in draw order
_SHAPE_PARAMS: dict[str, tuple[str, ...]] = {
    "isotropic": (),
    "dipole_ref": (),
    "patch": ("exponent",),
    "vivaldi": ("main_exponent", "null_angle_deg", "phase_ripple_deg", "ripple_period_deg"),
    "tabulated": (),
}


def make_isotropic() -> ElementPattern:
    return ElementPattern("isotropic")


def make_dipole_ref() -> ElementPattern:
    """Reference dipole: flat 2.15 dBi gain, zero phase, over the full view."""
    return ElementPattern("dipole_ref", {"peak_gain_dbi": 2.15})


def make_patch(peak_gain_dbi: float = 8.0, exponent: float = 1.5) -> ElementPattern:
    """Microstrip patch surrogate: cosine-power lobe, flat phase.

    Gain in dBi is peak + 20*exponent*log10(max(cos phi, floor)).
    """
    if exponent <= 0:
        raise PatternError(f"patch exponent must be > 0, got {exponent}")
    return ElementPattern("patch", {"peak_gain_dbi": float(peak_gain_dbi),
                                    "exponent": float(exponent)})


def make_vivaldi(peak_gain_dbi: float = 13.0, null_angle_deg: float = 50.0,
                 phase_ripple_deg: float = 60.0, ripple_period_deg: float = 25.0,
                 main_exponent: float = 3.0) -> ElementPattern:
    """Tapered-slot surrogate: narrow main lobe, sidelobe nulls, phase ripple.

    Magnitude is a cosine-power main lobe times |cos(pi*phi/(2*null_angle))|,
    giving deep nulls at +/-null_angle. Phase ripples sinusoidally with the
    configured amplitude and period.
    """
    if not 0 < null_angle_deg <= 90:
        raise PatternError(f"null_angle_deg must be in (0, 90], got {null_angle_deg}")
    if ripple_period_deg <= 0:
        raise PatternError(f"ripple_period_deg must be > 0, got {ripple_period_deg}")
    if main_exponent <= 0:
        raise PatternError(f"main_exponent must be > 0, got {main_exponent}")
    return ElementPattern("vivaldi", {
        "peak_gain_dbi": float(peak_gain_dbi),
        "null_angle_deg": float(null_angle_deg),
        "phase_ripple_deg": float(phase_ripple_deg),
        "ripple_period_deg": float(ripple_period_deg),
        "main_exponent": float(main_exponent),
    })


def make_pattern(kind: str, **params) -> ElementPattern:
    """Build a pattern by kind name; 'tabulated' takes file=<path>."""
    if kind == "tabulated":
        path = params.pop("file", None)
        if path is None or params:
            extra = ", ".join(sorted(params))
            raise PatternError(f"tabulated pattern takes only file=<path>"
                               + (f" (got {extra})" if extra else ""))
        return load_tabulated(path)
    makers = {"isotropic": make_isotropic, "dipole_ref": make_dipole_ref,
              "patch": make_patch, "vivaldi": make_vivaldi}
    if kind not in makers:
        raise PatternError(f"unknown pattern kind {kind!r}")
    try:
        return makers[kind](**params)
    except TypeError:
        raise PatternError(f"bad parameters for {kind}: {sorted(params)}") from None


def _magnitude_dbi(pattern: ElementPattern, az: np.ndarray) -> np.ndarray:
    k, p = pattern.kind, pattern.params
    if k == "isotropic":
        return np.zeros_like(az)
    if k == "dipole_ref":
        return np.full_like(az, p["peak_gain_dbi"])
    cos_az = np.maximum(np.cos(np.deg2rad(az)), _COS_FLOOR)
    if k == "patch":
        return p["peak_gain_dbi"] + 20.0 * p["exponent"] * np.log10(cos_az)
    if k == "vivaldi":
        null = np.maximum(np.abs(np.cos(np.pi * az / (2.0 * p["null_angle_deg"]))),
                          _COS_FLOOR)
        return (p["peak_gain_dbi"]
                + 20.0 * p["main_exponent"] * np.log10(cos_az)
                + 20.0 * np.log10(null))
    raise PatternError(f"unknown pattern kind {k!r}")


def _phase_deg(pattern: ElementPattern, az: np.ndarray) -> np.ndarray:
    if pattern.kind == "vivaldi":
        p = pattern.params
        return p["phase_ripple_deg"] * np.sin(2.0 * np.pi * az / p["ripple_period_deg"])
    return np.zeros_like(az)


def evaluate(pattern: ElementPattern, azimuth_deg) -> np.ndarray:
    """Complex gain at the given azimuth(s). Domain is [-90, 90] degrees."""
    az = np.asarray(azimuth_deg, dtype=float)
    scalar = az.ndim == 0
    az = np.atleast_1d(az)
    if np.any(np.abs(az) > 90.0) or np.any(~np.isfinite(az)):
        raise ValueError("azimuth out of range: must lie in [-90, 90] degrees")

    if pattern.kind == "tabulated":
        t = np.asarray(pattern.samples, dtype=float)
        mag_dbi = np.interp(az, t[:, 0], t[:, 1])
        phase = np.interp(az, t[:, 0], np.unwrap(t[:, 2], period=360.0))
    else:
        mag_dbi = _magnitude_dbi(pattern, az)
        phase = _phase_deg(pattern, az)

    if pattern.phase_noise_deg is not None:
        phase = phase + np.interp(az, _NOISE_GRID, pattern.phase_noise_deg)

    g = 10.0 ** (mag_dbi / 20.0) * np.exp(1j * np.deg2rad(phase))
    return g[0] if scalar else g


def perturb(pattern: ElementPattern, perturbation: PatternPerturbation,
            rng: np.random.Generator) -> ElementPattern:
    """Realize one manufacturing deviation of a pattern.

    Draw order is fixed (shape parameter scales, then the phase-noise grid)
    so a given rng state maps to exactly one perturbed pattern. Zero
    perturbation returns a pattern that evaluates bit-identically.
    """
    tol = perturbation.param_tolerance
    std = perturbation.phase_noise_std_deg
    if tol == 0.0 and std == 0.0:
        return pattern

    params = dict(pattern.params)
    if tol > 0.0:
        names = _SHAPE_PARAMS[pattern.kind]
        scales = rng.uniform(1.0 - tol, 1.0 + tol, size=len(names))
        for name, s in zip(names, scales):
            params[name] = params[name] * s
    noise = None
    if std > 0.0:
        noise = tuple(rng.normal(0.0, std, size=_NOISE_GRID.size))
    return ElementPattern(pattern.kind, params, pattern.samples, noise)


def _parse_row(line: str, lineno: int) -> tuple[float, float, float]:
    parts = line.split(",")
    if len(parts) != 3:
        raise TableError(f"row {lineno}: expected 3 comma-separated fields, got {len(parts)}")
    try:
        az, dbi, ph = (float(s) for s in parts)
    except ValueError:
        raise TableError(f"row {lineno}: non-numeric field in {line!r}") from None
    if not all(map(math.isfinite, (az, dbi, ph))):
        raise TableError(f"row {lineno}: non-finite value in {line!r}")
    return az, dbi, ph


def load_tabulated(source) -> ElementPattern:
    """Parse a pattern table: header azimuth_deg,gain_dbi,phase_deg then rows.

    Azimuths must be strictly increasing and must span [-90, 90] so every
    in-domain lookup interpolates rather than extrapolates. Errors carry the
    offending line number.
    """
    if hasattr(source, "read"):
        lines = source.read().splitlines()
    else:
        lines = Path(source).read_text().splitlines()
    if not lines or lines[0].strip() != TABLE_HEADER:
        raise TableError(f"line 1: header must be {TABLE_HEADER!r}")
    rows = []
    for i, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        rows.append(_parse_row(line, i))
    if len(rows) < 2:
        raise TableError("table needs at least 2 rows")
    for i in range(1, len(rows)):
        if rows[i][0] <= rows[i - 1][0]:
            raise TableError(f"row {i + 2}: azimuths must be strictly increasing")
    if rows[0][0] > -90.0 or rows[-1][0] < 90.0:
        raise TableError(f"table must span [-90, 90], covers "
                         f"[{rows[0][0]}, {rows[-1][0]}]")
    return ElementPattern("tabulated", samples=tuple(rows))


def export_tabulated(pattern: ElementPattern, destination, step_deg: float = 1.0) -> None:
    """Write a pattern to the table format.

    A nominal tabulated pattern round-trips bit-exactly (stored rows are
    written verbatim); parametric kinds are sampled on a uniform grid.
    """
    if pattern.kind == "tabulated" and pattern.phase_noise_deg is None:
        rows = pattern.samples
    else:
        if step_deg <= 0:
            raise PatternError(f"step_deg must be > 0, got {step_deg}")
        az = np.linspace(-90.0, 90.0, round(180.0 / step_deg) + 1)
        g = evaluate(pattern, az)
        rows = [(float(a), float(20.0 * np.log10(np.abs(v))),
                 float(np.rad2deg(np.angle(v)))) for a, v in zip(az, g)]
    text = "\n".join([TABLE_HEADER] + [f"{a!r},{d!r},{p!r}" for a, d, p in rows]) + "\n"
    if hasattr(destination, "write"):
        destination.write(text)
    else:
        Path(destination).write_text(text)

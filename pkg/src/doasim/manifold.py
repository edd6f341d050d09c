"""Array manifold: gain-weighted steering vectors and snapshot synthesis.

The steering vector folds each element's complex pattern into the usual
phase ramp: a_n(phi) = g_n(phi) * exp(-j*pi*p_n*sin(phi)) for integer
positions p_n in half-wavelength units. An optional coupling matrix C
left-multiplies the result.

SNR convention: noise power is 1 per element; a source quoted at S dB has
amplitude 10**(S/20), i.e. the power an isotropic element would receive.
Element gain then enters only through the steering vector, never twice.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .geometry import ArrayGeometry
from .patterns import ElementPattern, evaluate


@dataclass(frozen=True)
class ArrayManifold:
    """Geometry plus one pattern per element plus optional coupling."""

    geometry: ArrayGeometry
    element_patterns: tuple[ElementPattern, ...]
    coupling: np.ndarray | None = None
    label: str = ""

    def __post_init__(self):
        n = self.geometry.element_count
        if len(self.element_patterns) != n:
            raise ValueError(f"need {n} element patterns, got {len(self.element_patterns)}")
        if self.coupling is not None:
            c = np.array(self.coupling, dtype=complex)
            if c.shape != (n, n):
                raise ValueError(f"coupling must be {n}x{n}, got {c.shape}")
            if not np.allclose(c, c.T, atol=1e-9):
                raise ValueError("coupling must be symmetric (reciprocity)")
            if not np.allclose(np.diag(c), 1.0, atol=1e-9):
                raise ValueError("coupling diagonal must be 1")
            c.flags.writeable = False
            object.__setattr__(self, "coupling", c)
        if not self.label:
            kinds = sorted({p.kind for p in self.element_patterns})
            object.__setattr__(self, "label",
                               f"{self.geometry.name}/{'+'.join(kinds)}")


def make_manifold(geometry: ArrayGeometry, pattern, coupling=None,
                  label: str = "") -> ArrayManifold:
    """Convenience constructor; a single pattern is replicated per element."""
    if isinstance(pattern, ElementPattern):
        patterns = (pattern,) * geometry.element_count
    else:
        patterns = tuple(pattern)
    return ArrayManifold(geometry, patterns, coupling, label)


def steering_matrix(manifold: ArrayManifold, azimuth_deg) -> np.ndarray:
    """Steering vectors for a grid of azimuths, as columns of an N x K array."""
    az = np.atleast_1d(np.asarray(azimuth_deg, dtype=float))
    pos = np.asarray(manifold.geometry.positions, dtype=float)
    phase = np.exp(-1j * np.pi * pos[:, None] * np.sin(np.deg2rad(az))[None, :])
    pats = manifold.element_patterns
    if all(p is pats[0] for p in pats):
        gains = np.broadcast_to(evaluate(pats[0], az), phase.shape)
    else:
        gains = np.stack([evaluate(p, az) for p in pats])
    a = gains * phase
    if manifold.coupling is not None:
        a = manifold.coupling @ a
    return a


def steering_vector(manifold: ArrayManifold, azimuth_deg: float) -> np.ndarray:
    """Single steering vector, shape (N,)."""
    return steering_matrix(manifold, azimuth_deg)[:, 0]


def apply_coupling_model(manifold: ArrayManifold, c1: complex,
                         decay: float) -> ArrayManifold:
    """Attach a distance-decaying mutual coupling surrogate.

    C[i][j] = c1 * decay**(|p_i - p_j| - 1) off the diagonal, 1 on it.
    Adjacent (spacing 1) elements couple with strength c1; wider spacings
    decay geometrically. c1 = 0 means no coupling.
    """
    if abs(c1) >= 1.0:
        raise ValueError(f"|c1| must be < 1, got {abs(c1)}")
    if not 0.0 < decay < 1.0:
        raise ValueError(f"decay must be in (0, 1), got {decay}")
    if c1 == 0:
        return ArrayManifold(manifold.geometry, manifold.element_patterns,
                             None, manifold.label)
    pos = np.asarray(manifold.geometry.positions)
    dist = np.abs(pos[:, None] - pos[None, :])
    c = np.where(dist == 0, 1.0 + 0.0j, c1 * np.power(float(decay), dist - 1.0))
    return ArrayManifold(manifold.geometry, manifold.element_patterns,
                         c, manifold.label)


@dataclass(frozen=True)
class SourceScenario:
    """Far-field narrowband sources: angles (degrees) and per-source SNR (dB)."""

    angles: tuple[float, ...]
    snr_db: float | tuple[float, ...] = 0.0

    def __post_init__(self):
        angles = tuple(float(a) for a in self.angles)
        object.__setattr__(self, "angles", angles)
        if not angles:
            raise ValueError("need at least one source")
        if any(abs(a) > 90.0 for a in angles):
            raise ValueError(f"source angles must lie in [-90, 90]: {angles}")
        if len(set(angles)) != len(angles):
            raise ValueError(f"source angles must be distinct: {angles}")
        if isinstance(self.snr_db, (list, tuple)):
            snr = tuple(float(s) for s in self.snr_db)
            if len(snr) != len(angles):
                raise ValueError(f"need {len(angles)} SNR values, got {len(snr)}")
            object.__setattr__(self, "snr_db", snr)

    @property
    def source_count(self) -> int:
        return len(self.angles)

    @property
    def per_source_snr_db(self) -> tuple[float, ...]:
        if isinstance(self.snr_db, tuple):
            return self.snr_db
        return (float(self.snr_db),) * len(self.angles)


@dataclass(frozen=True)
class SnapshotSet:
    """T array snapshots (N x T complex) plus provenance metadata."""

    data: np.ndarray
    scenario: SourceScenario
    manifold_label: str = ""
    seed: object = None

    def __post_init__(self):
        d = np.asarray(self.data)
        d.flags.writeable = False
        object.__setattr__(self, "data", d)

    @property
    def snapshot_count(self) -> int:
        return self.data.shape[1]


def generate_snapshots(manifold: ArrayManifold, scenario: SourceScenario,
                       snapshot_count: int, rng) -> SnapshotSet:
    """Simulate x(t) = A s(t) + n(t) with unit-power complex Gaussian noise.

    Sources are i.i.d. circular complex Gaussian with amplitude set by the
    per-source SNR. rng may be a Generator, a SeedSequence, or an int seed;
    the same seed and inputs reproduce the snapshot set bit-identically
    (source draws come before noise draws).
    """
    if snapshot_count < 1:
        raise ValueError(f"snapshot_count must be >= 1, got {snapshot_count}")
    seed_note = None if isinstance(rng, np.random.Generator) else rng
    gen = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)

    a = steering_matrix(manifold, scenario.angles)
    amp = 10.0 ** (np.asarray(scenario.per_source_snr_db) / 20.0)
    l, t = scenario.source_count, snapshot_count
    sr = gen.standard_normal((2, l, t))
    s = amp[:, None] * (sr[0] + 1j * sr[1]) / np.sqrt(2.0)
    nr = gen.standard_normal((2, manifold.geometry.element_count, t))
    noise = (nr[0] + 1j * nr[1]) / np.sqrt(2.0)
    return SnapshotSet(a @ s + noise, scenario, manifold.label, seed_note)


def sample_covariance(snapshots) -> np.ndarray:
    """Hermitian sample covariance X X^H / T, symmetrized against roundoff."""
    x = snapshots.data if isinstance(snapshots, SnapshotSet) else np.asarray(snapshots)
    if x.ndim != 2 or x.shape[1] < 1:
        raise ValueError(f"need an N x T snapshot array, got shape {x.shape}")
    r = x @ x.conj().T / x.shape[1]
    return (r + r.conj().T) / 2.0

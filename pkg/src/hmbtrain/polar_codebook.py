"""Polar-domain single-beam codebook: angular grid plus Fresnel distance rings.

Angles are sampled on the inverse-count grid that puts every other codeword on
a Dirichlet null (exact for half-wavelength spacing); distances are sampled so
that the Fresnel-integral envelope |C(z)+jS(z)|/z between adjacent rings stays
at or below a coherence threshold Delta. Ring 0 is always the far-field
codeword (r = inf).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np
from scipy import special

from .array_model import ArrayConfig, steering_from_cosines

ENVELOPE_SEARCH_MAX = 40.0
ENVELOPE_GUARD = 5.0  # a crossing must stay below Delta this far beyond itself


class AngleSample(NamedTuple):
    iz: int  # index on the cos(phi) grid
    ix: int  # index on the u grid
    cos_phi: float
    u: float


@dataclass(frozen=True)
class SamplingPoint:
    """One codeword location: direction cosines, ring index, and distance."""

    iz: int
    ix: int
    ring: int
    cos_phi: float
    u: float
    r: float

    @property
    def phi(self) -> float:
        return math.acos(self.cos_phi)

    @property
    def theta(self) -> float:
        sp = math.sqrt(max(0.0, 1.0 - self.cos_phi**2))
        if sp == 0.0 or abs(self.u) > sp:
            return math.nan
        return math.acos(max(-1.0, min(1.0, self.u / sp)))


@dataclass(frozen=True)
class SingleBeamCodebook:
    """Rows of unit-norm codewords with their sampling points.

    Row order is deterministic: angle-major (cos(phi) grid outer, u grid
    inner), ring-minor with the far-field ring first.
    """

    cfg: ArrayConfig
    rows: np.ndarray  # (S, M*N) complex
    points: tuple[SamplingPoint, ...]
    delta: Optional[float]
    zeta: Optional[float]
    r_min: float
    r_max: float

    @property
    def size(self) -> int:
        return self.rows.shape[0]

    def matched_powers(self, vector: np.ndarray) -> np.ndarray:
        """|<row_s, vector>|^2 for every codeword (conjugate inner products)."""
        return np.abs(self.rows.conj() @ vector) ** 2


def angular_grid(cfg: ArrayConfig) -> list[AngleSample]:
    """Direction-cosine grid retaining only physically valid pairs.

    cos(phi) = (2s - M - 1)/M and u = (2t - N - 1)/N; a pair survives when
    |u| <= sin(phi).
    """
    out = []
    for iz in range(cfg.m):
        cos_phi = (2 * (iz + 1) - cfg.m - 1) / cfg.m
        sin_phi = math.sqrt(1.0 - cos_phi * cos_phi)
        for ix in range(cfg.n):
            u = (2 * (ix + 1) - cfg.n - 1) / cfg.n
            if abs(u) <= sin_phi:
                out.append(AngleSample(iz=iz, ix=ix, cos_phi=cos_phi, u=u))
    return out


def fresnel(x):
    """Fresnel integrals (C(x), S(x)) with the cos/sin(pi t^2 / 2) convention."""
    s, c = special.fresnel(x)
    return c, s


def fresnel_envelope(z):
    """|C(z) + j S(z)| / z, extended by its limit 1 at z = 0."""
    z = np.asarray(z, dtype=float)
    c, s = fresnel(z)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.hypot(c, s) / np.abs(z)
    out = np.where(z == 0.0, 1.0, out)
    if out.ndim == 0:
        return float(out)
    return out


def zeta_for_threshold(delta: float, tol: float = 1e-8) -> float:
    """Smallest z > 0 where the Fresnel envelope drops to delta and stays below.

    The envelope oscillates, so a candidate first crossing only counts if the
    envelope remains at or below delta on [z, z + 5] (dense grid check);
    otherwise the search continues past the violation.
    """
    if not 0.05 < delta < 0.99:
        raise ValueError("threshold must lie in (0.05, 0.99)")
    step = 1e-3
    grid = np.arange(step, ENVELOPE_SEARCH_MAX, step)
    vals = fresnel_envelope(grid)
    below = vals <= delta
    start = 0
    while True:
        if start >= grid.size or not below[start:].any():
            raise RuntimeError("no stable envelope crossing found in search range")
        idx = start + int(np.argmax(below[start:]))
        lo = grid[idx] - step
        hi = grid[idx]
        while hi - lo > tol:
            mid = 0.5 * (lo + hi)
            if fresnel_envelope(mid) <= delta:
                hi = mid
            else:
                lo = mid
        zeta = hi
        guard = np.linspace(zeta, zeta + ENVELOPE_GUARD, 5001)
        bad = fresnel_envelope(guard) > delta + 1e-12
        if not bad.any():
            return zeta
        # resume scanning beyond the violation
        resume = zeta + ENVELOPE_GUARD * np.argmax(bad) / 5000.0
        start = int(np.searchsorted(grid, resume))


def _axis_spacing(cfg: ArrayConfig, angle: AngleSample, zeta: float, axis: str) -> float:
    """Ring spacing in 1/r (1/m) for the requested sampling axis at one angle.

    Each axis contributes |kappa/r_p - kappa/r_q| >= 2 lambda zeta^2 / A^2 with
    kappa the curvature factor and A the axis aperture; 'auto' picks the axis
    with the finer spacing (larger effective aperture).
    """
    kappa_z = 1.0 - angle.cos_phi**2
    kappa_x = 1.0 - angle.u**2
    step_z = 2.0 * cfg.wavelength * zeta**2 / (cfg.m * cfg.d_z) ** 2
    step_x = 2.0 * cfg.wavelength * zeta**2 / (cfg.n * cfg.d_x) ** 2
    spacing_z = step_z / kappa_z if kappa_z > 0 else math.inf
    spacing_x = step_x / kappa_x if kappa_x > 0 else math.inf
    if axis == "z":
        return spacing_z
    if axis == "x":
        return spacing_x
    if axis == "auto":
        return min(spacing_z, spacing_x)
    raise ValueError(f"unknown ring axis {axis!r}")


def distance_rings(
    angle: AngleSample,
    zeta: float,
    cfg: ArrayConfig,
    r_min: float,
    r_max: float,
    axis: str = "auto",
) -> list[float]:
    """Sampled distances for one angle: [inf, r_1, r_2, ...].

    Ring j sits at 1/r = j * spacing; finite rings outside [r_min, r_max] are
    dropped, and the far-field ring is always kept.
    """
    if zeta <= 0:
        raise ValueError("zeta must be positive")
    if r_min <= 0:
        raise ValueError("the inner distance bound must be positive")
    rings = [math.inf]
    spacing = _axis_spacing(cfg, angle, zeta, axis)
    if not math.isfinite(spacing) or spacing <= 0:
        return rings
    j = 1
    while True:
        r = 1.0 / (j * spacing)
        if r < r_min:
            break
        if r <= r_max:
            rings.append(r)
        j += 1
    return rings


def build_codebook(
    cfg: ArrayConfig,
    delta: float = 0.5,
    r_min: Optional[float] = None,
    r_max: Optional[float] = None,
    far_field_only: bool = False,
    axis: str = "auto",
) -> SingleBeamCodebook:
    """Assemble the polar-domain codebook over all (angle, ring) points."""
    if r_min is None:
        r_min = cfg.fresnel_limit()
    if r_max is None:
        r_max = cfg.rayleigh_distance()
    zeta = zeta_for_threshold(delta)
    points = []
    rows = []
    for angle in angular_grid(cfg):
        if far_field_only:
            rings = [math.inf]
        else:
            rings = distance_rings(angle, zeta, cfg, r_min, r_max, axis=axis)
        for ring_idx, r in enumerate(rings):
            points.append(
                SamplingPoint(iz=angle.iz, ix=angle.ix, ring=ring_idx, cos_phi=angle.cos_phi, u=angle.u, r=r)
            )
            rows.append(steering_from_cosines(cfg, angle.cos_phi, angle.u, r, mode="exact"))
    return SingleBeamCodebook(
        cfg=cfg,
        rows=np.array(rows),
        points=tuple(points),
        delta=delta,
        zeta=zeta,
        r_min=r_min,
        r_max=r_max,
    )


def dft_codebook(cfg: ArrayConfig) -> SingleBeamCodebook:
    """Far-field baseline: all M*N direction-cosine pairs, quadratic terms zero.

    Rows are mutually orthogonal for half-wavelength spacing. Invalid direction
    pairs (|u| > sin(phi)) are kept so the codebook is a complete orthogonal
    basis.
    """
    points = []
    rows = []
    for iz in range(cfg.m):
        cos_phi = (2 * (iz + 1) - cfg.m - 1) / cfg.m
        for ix in range(cfg.n):
            u = (2 * (ix + 1) - cfg.n - 1) / cfg.n
            points.append(SamplingPoint(iz=iz, ix=ix, ring=0, cos_phi=cos_phi, u=u, r=math.inf))
            rows.append(steering_from_cosines(cfg, cos_phi, u, math.inf))
    return SingleBeamCodebook(
        cfg=cfg,
        rows=np.array(rows),
        points=tuple(points),
        delta=None,
        zeta=None,
        r_min=cfg.fresnel_limit(),
        r_max=math.inf,
    )


def projection(codebook: SingleBeamCodebook, p: int, q: int) -> float:
    """Magnitude of the conjugate inner product between two codewords."""
    if not (0 <= p < codebook.size and 0 <= q < codebook.size):
        raise ValueError("codeword index out of range")
    return float(abs(np.vdot(codebook.rows[q], codebook.rows[p])))


def same_angle_cross_ring_coherence(codebook: SingleBeamCodebook) -> float:
    """Max projection over pairs sharing an angle but not a ring (0 if none)."""
    groups: dict[tuple[int, int], list[int]] = {}
    for i, pt in enumerate(codebook.points):
        groups.setdefault((pt.iz, pt.ix), []).append(i)
    worst = 0.0
    for members in groups.values():
        for a in range(len(members)):
            for b in range(a + 1, len(members)):
                worst = max(worst, projection(codebook, members[a], members[b]))
    return worst


def save_codebook(codebook: SingleBeamCodebook, path) -> None:
    """Text export: one header line, then per-row grid indices, distance, and
    interleaved re/im entries at 17 significant digits."""
    cfg = codebook.cfg
    delta = codebook.delta if codebook.delta is not None else math.nan
    with open(path, "w") as fh:
        fh.write(
            f"{cfg.m} {cfg.n} {cfg.d_x:.17g} {cfg.d_z:.17g} "
            f"{cfg.wavelength:.17g} {delta:.17g} {codebook.size}\n"
        )
        for pt, row in zip(codebook.points, codebook.rows):
            entries = " ".join(f"{v:.17g}" for pair in zip(row.real, row.imag) for v in pair)
            fh.write(f"{pt.iz} {pt.ix} {pt.ring} {pt.r:.17g} {entries}\n")


def load_codebook(path) -> SingleBeamCodebook:
    """Inverse of :func:`save_codebook` (sampling-point cosines are
    reconstructed from the grid indices)."""
    with open(path) as fh:
        header = fh.readline().split()
        m, n = int(header[0]), int(header[1])
        d_x, d_z, lam, delta = (float(v) for v in header[2:6])
        size = int(header[6])
        cfg = ArrayConfig(m=m, n=n, d_x=d_x, d_z=d_z, wavelength=lam, freq=299_792_458.0 / lam)
        points = []
        rows = []
        for _ in range(size):
            parts = fh.readline().split()
            iz, ix, ring = int(parts[0]), int(parts[1]), int(parts[2])
            r = float(parts[3])
            vals = np.array([float(v) for v in parts[4:]])
            rows.append(vals[0::2] + 1j * vals[1::2])
            cos_phi = (2 * (iz + 1) - m - 1) / m
            u = (2 * (ix + 1) - n - 1) / n
            points.append(SamplingPoint(iz=iz, ix=ix, ring=ring, cos_phi=cos_phi, u=u, r=r))
    return SingleBeamCodebook(
        cfg=cfg,
        rows=np.array(rows),
        points=tuple(points),
        delta=None if math.isnan(delta) else delta,
        zeta=None if math.isnan(delta) else zeta_for_threshold(delta),
        r_min=cfg.fresnel_limit(),
        r_max=cfg.rayleigh_distance(),
    )

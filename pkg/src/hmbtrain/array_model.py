"""Planar-array geometry, spherical-wave steering vectors, and the link signal model.

The array sits in the xz-plane with symmetric element offsets (half-integer for
even counts). A point at polar coordinates (r, theta, phi) -- distance, azimuth,
elevation -- sees per-element path lengths that curve with 1/r; steering vectors
carry those spherical-wave phases. The far field is the explicit ``r = inf``
sentinel, where all quadratic-in-index phase terms are zero.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

C0 = 299_792_458.0  # speed of light, m/s


@dataclass(frozen=True)
class ArrayConfig:
    """Uniform planar array: ``m`` rows along z, ``n`` columns along x.

    Spacings are in meters; ``wavelength`` must match ``freq`` (c/f) to 1e-6
    relative. Element offsets are symmetric about the array center, so stored
    vectors are flattened column-major over (n, m): index i = i_n * m + i_m.
    """

    m: int
    n: int
    d_x: float
    d_z: float
    wavelength: float
    freq: float

    def __post_init__(self):
        if self.m < 1 or self.n < 1:
            raise ValueError("antenna counts must be >= 1")
        if self.d_x <= 0 or self.d_z <= 0:
            raise ValueError("antenna spacings must be positive")
        if abs(self.wavelength - C0 / self.freq) > 1e-6 * self.wavelength:
            raise ValueError("wavelength and carrier frequency disagree")

    @classmethod
    def half_wavelength(cls, m: int, n: int, freq: float) -> "ArrayConfig":
        lam = C0 / freq
        return cls(m=m, n=n, d_x=lam / 2, d_z=lam / 2, wavelength=lam, freq=freq)

    @property
    def size(self) -> int:
        return self.m * self.n

    def offsets(self) -> tuple[np.ndarray, np.ndarray]:
        """Symmetric (z-axis, x-axis) element offsets in element units."""
        mm = np.arange(self.m) - (self.m - 1) / 2.0
        nn = np.arange(self.n) - (self.n - 1) / 2.0
        return mm, nn

    @property
    def aperture(self) -> float:
        """Array diagonal in meters."""
        return math.hypot(self.n * self.d_x, self.m * self.d_z)

    def fresnel_limit(self) -> float:
        """Inner edge of the radiating near field."""
        return 0.62 * math.sqrt(2.0 * self.aperture**2 / self.wavelength)

    def rayleigh_distance(self) -> float:
        """Conventional near/far-field boundary 2 D^2 / lambda."""
        return 2.0 * self.aperture**2 / self.wavelength


@dataclass(frozen=True)
class ApPlacement:
    """Polar coordinates of an access point seen from the reference point."""

    r: float
    theta: float
    phi: float
    index: int = 0

    def __post_init__(self):
        if self.r <= 0:
            raise ValueError("AP distance must be positive")
        if not 0.0 < self.phi < math.pi:
            raise ValueError("elevation must lie in (0, pi)")
        if not 0.0 <= self.theta < 2 * math.pi:
            raise ValueError("azimuth must lie in [0, 2 pi)")


@dataclass(frozen=True)
class PathParams:
    """One propagation path: complex gain, phase shift, and polar coordinates."""

    gain: complex
    phase_shift: float
    r: float
    theta: float
    phi: float


@dataclass(frozen=True)
class ChannelRealization:
    """Narrowband channel vector from one AP to the single-antenna user."""

    vector: np.ndarray
    ap_index: int
    r: float
    theta: float
    phi: float

    @property
    def gain(self) -> float:
        """Channel norm; sqrt(M N) |beta_1| for a pure line-of-sight link."""
        return float(np.linalg.norm(self.vector))


def _check_half_index(count: int, idx: float, name: str) -> None:
    shifted = idx + (count - 1) / 2.0
    if abs(shifted - round(shifted)) > 1e-9 or not 0 <= round(shifted) <= count - 1:
        raise ValueError(f"{name}={idx} outside the symmetric index set for count {count}")


def element_position(cfg: ArrayConfig, ap: ApPlacement, m: float, n: float) -> tuple[float, float, float]:
    """Cartesian position of the (m, n)-th element of an AP array.

    m and n are the symmetric half-integer offsets; the array center sits at
    the AP's polar coordinates and elements extend along x (n d_x) and z (m d_z).
    """
    _check_half_index(cfg.m, m, "m")
    _check_half_index(cfg.n, n, "n")
    x = ap.r * math.cos(ap.theta) * math.sin(ap.phi) + n * cfg.d_x
    y = ap.r * math.sin(ap.theta) * math.sin(ap.phi)
    z = ap.r * math.cos(ap.phi) + m * cfg.d_z
    return (x, y, z)


def exact_distance(cfg: ArrayConfig, theta: float, phi: float, r: float, m: float, n: float) -> float:
    """Distance from the (m, n)-th element to the reference point.

    Accepts ``r = inf`` (returns inf). Depends on the angles only through
    cos(phi) and u = cos(theta) sin(phi).
    """
    _check_half_index(cfg.m, m, "m")
    _check_half_index(cfg.n, n, "n")
    if r <= 0:
        raise ValueError("distance must be positive")
    if math.isinf(r):
        return math.inf
    u = math.cos(theta) * math.sin(phi)
    cp = math.cos(phi)
    sq = r * r + (n * cfg.d_x) ** 2 + (m * cfg.d_z) ** 2 + 2 * r * n * cfg.d_x * u + 2 * r * m * cfg.d_z * cp
    return math.sqrt(sq)


def taylor_distance(cfg: ArrayConfig, theta: float, phi: float, r: float, m: float, n: float) -> float:
    """Second-order expansion of :func:`exact_distance` in the element offsets.

    r + n d_x u + n^2 d_x^2 (1-u^2)/(2r) + m d_z cos(phi) + m^2 d_z^2 sin^2(phi)/(2r),
    with u = cos(theta) sin(phi). Accurate for r much larger than the aperture
    (not enforced).
    """
    _check_half_index(cfg.m, m, "m")
    _check_half_index(cfg.n, n, "n")
    if r <= 0:
        raise ValueError("distance must be positive")
    if math.isinf(r):
        return math.inf
    u = math.cos(theta) * math.sin(phi)
    cp = math.cos(phi)
    return (
        r
        + n * cfg.d_x * u
        + (n * cfg.d_x) ** 2 * (1 - u * u) / (2 * r)
        + m * cfg.d_z * cp
        + (m * cfg.d_z) ** 2 * (1 - cp * cp) / (2 * r)
    )


def _phase_profile(cfg: ArrayConfig, cos_phi: float, u: float, r: float, mode: str) -> np.ndarray:
    """Per-element path-length excess (D - r) flattened n-major, in meters."""
    mm, nn = cfg.offsets()
    xoff = nn * cfg.d_x  # (n,)
    zoff = mm * cfg.d_z  # (m,)
    if math.isinf(r):
        excess = u * xoff[:, None] + cos_phi * zoff[None, :]
    elif mode == "exact":
        sq = (
            r * r
            + xoff[:, None] ** 2
            + zoff[None, :] ** 2
            + 2 * r * (u * xoff[:, None] + cos_phi * zoff[None, :])
        )
        # cosine pairs slightly outside the unit sphere (main-lobe box
        # corners) may push sq below zero; grazing incidence is the limit
        excess = np.sqrt(np.maximum(sq, 0.0)) - r
    elif mode == "taylor":
        excess = (
            u * xoff[:, None]
            + xoff[:, None] ** 2 * (1 - u * u) / (2 * r)
            + cos_phi * zoff[None, :]
            + zoff[None, :] ** 2 * (1 - cos_phi * cos_phi) / (2 * r)
        )
    else:
        raise ValueError(f"unknown steering mode {mode!r}")
    return excess.reshape(-1)  # index = i_n * m + i_m


def steering_from_cosines(cfg: ArrayConfig, cos_phi: float, u: float, r: float, mode: str = "exact") -> np.ndarray:
    """Unit-norm steering vector parameterized by direction cosines.

    cos_phi is the z-axis direction cosine, u = cos(theta) sin(phi) the x-axis
    one. All entries have magnitude 1/sqrt(M N); ``r = inf`` drops the
    spherical curvature terms.
    """
    if r <= 0:
        raise ValueError("distance must be positive")
    excess = _phase_profile(cfg, cos_phi, u, r, mode)
    phases = -2j * math.pi / cfg.wavelength * excess
    return np.exp(phases) / math.sqrt(cfg.size)


def steering_vector(cfg: ArrayConfig, theta: float, phi: float, r: float, mode: str = "exact") -> np.ndarray:
    """Spherical-wave steering vector toward (theta, phi, r).

    In ``taylor`` mode the vector factors exactly as the Kronecker product of
    an x-axis and a z-axis profile; ``exact`` mode uses true element distances.
    """
    return steering_from_cosines(cfg, math.cos(phi), math.cos(theta) * math.sin(phi), r, mode)


def axis_factors(cfg: ArrayConfig, theta: float, phi: float, r: float) -> tuple[np.ndarray, np.ndarray]:
    """Separable (x-axis, z-axis) profiles whose Kronecker product is the
    taylor-mode steering vector."""
    u = math.cos(theta) * math.sin(phi)
    cp = math.cos(phi)
    mm, nn = cfg.offsets()
    xoff = nn * cfg.d_x
    zoff = mm * cfg.d_z
    if math.isinf(r):
        ex_x = u * xoff
        ex_z = cp * zoff
    else:
        ex_x = u * xoff + xoff**2 * (1 - u * u) / (2 * r)
        ex_z = cp * zoff + zoff**2 * (1 - cp * cp) / (2 * r)
    k = 2 * math.pi / cfg.wavelength
    v_x = np.exp(-1j * k * ex_x) / math.sqrt(cfg.n)
    v_z = np.exp(-1j * k * ex_z) / math.sqrt(cfg.m)
    return v_x, v_z


def los_channel(cfg: ArrayConfig, r: float, theta: float, phi: float, rho0: float, ap_index: int = 0) -> ChannelRealization:
    """Line-of-sight channel from an AP whose user sits at (r, theta, phi).

    h = sqrt(M N) * (sqrt(rho0)/r) * exp(-2j pi r / lambda) * g with g the exact
    steering vector; rho0 is the linear reference power gain at 1 m.
    """
    if r <= 0 or math.isinf(r):
        raise ValueError("line-of-sight distance must be finite and positive")
    if rho0 <= 0:
        raise ValueError("reference gain must be positive (linear scale)")
    g = steering_vector(cfg, theta, phi, r, mode="exact")
    beta = math.sqrt(rho0) / r
    h = math.sqrt(cfg.size) * beta * np.exp(-2j * math.pi * r / cfg.wavelength) * g
    return ChannelRealization(vector=h, ap_index=ap_index, r=r, theta=theta, phi=phi)


def multipath_channel(cfg: ArrayConfig, paths: list[PathParams], ap_index: int = 0) -> ChannelRealization:
    """Coherent sum of per-path spherical-wave components.

    The first entry is the line-of-sight path and must carry the strictly
    largest |gain|.
    """
    if not paths:
        raise ValueError("at least one path required")
    lead = abs(paths[0].gain)
    if any(abs(p.gain) >= lead for p in paths[1:]):
        raise ValueError("line-of-sight path must have the strictly largest gain")
    h = np.zeros(cfg.size, dtype=complex)
    for p in paths:
        g = steering_vector(cfg, p.theta, p.phi, p.r, mode="exact")
        h += p.gain * np.exp(-1j * p.phase_shift) * g
    h *= math.sqrt(cfg.size)
    lead_path = paths[0]
    return ChannelRealization(vector=h, ap_index=ap_index, r=lead_path.r, theta=lead_path.theta, phi=lead_path.phi)


def random_nlos_paths(
    rng: np.random.Generator,
    los: PathParams,
    count: int,
    gain_ratio: tuple[float, float] = (0.05, 0.3),
    r_range: tuple[float, float] = (1.0, 50.0),
    phi_range: tuple[float, float] = (0.3, math.pi - 0.3),
) -> list[PathParams]:
    """LoS path plus ``count`` reflected paths with uniform parameters.

    Reflected gains stay strictly below the line-of-sight gain (ratios drawn
    from ``gain_ratio``); angles and distances are uniform over their ranges.
    """
    if not 0 < gain_ratio[0] <= gain_ratio[1] < 1:
        raise ValueError("reflected-path gain ratios must lie strictly inside (0, 1)")
    paths = [los]
    lead = abs(los.gain)
    for _ in range(count):
        ratio = rng.uniform(*gain_ratio)
        paths.append(
            PathParams(
                gain=lead * ratio * np.exp(2j * math.pi * rng.uniform()),
                phase_shift=rng.uniform(0.0, 2 * math.pi),
                r=rng.uniform(*r_range),
                theta=rng.uniform(0.0, 2 * math.pi),
                phi=rng.uniform(*phi_range),
            )
        )
    return paths


def complex_noise(rng: np.random.Generator, noise_power: float, size=None):
    """Circularly-symmetric complex Gaussian samples with variance noise_power."""
    if noise_power < 0:
        raise ValueError("noise power must be nonnegative")
    scale = math.sqrt(noise_power / 2.0)
    return scale * (rng.standard_normal(size) + 1j * rng.standard_normal(size))


def received_signal(
    channels: list[ChannelRealization],
    weights: list[np.ndarray],
    x: complex,
    noise_power: float,
    rng: np.random.Generator,
) -> complex:
    """Superimposed downlink sample: sum_k h_k^H w_k x plus complex noise."""
    if len(channels) != len(weights):
        raise ValueError("one weight vector per AP required")
    y = 0.0 + 0.0j
    for ch, w in zip(channels, weights):
        y += np.vdot(ch.vector, w) * x
    return y + complex_noise(rng, noise_power)

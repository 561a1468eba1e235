"""Multi-arm beam synthesis: superpose one bucket of single-beam codewords,
evaluate radiation patterns, and tune per-sub-beam phases.

A bucket of V codeword indices becomes one transmit vector
w = sum_i exp(j phase_i)/sqrt(V) * c_i  (analog columns are codebook rows, the
digital precoder contributes the constant-modulus phases). Patterns are the
power-normalized matched responses |<steering(point), w>|^2, so the received
power at a point is P0 * M*N * beta^2 * W exactly for a line-of-sight link.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .array_model import ArrayConfig, steering_from_cosines
from .hash_family import BucketPartition
from .polar_codebook import AngleSample, SamplingPoint, SingleBeamCodebook, _axis_spacing

PATTERN_FLOOR = 1e-6  # guards the deviation quotient near pattern nulls


@dataclass(frozen=True)
class MultiArmCodeword:
    """Synthesized weights with the bucket and phases that produced them."""

    weights: np.ndarray
    bucket: tuple[int, ...]
    phases: np.ndarray

    @property
    def arms(self) -> int:
        return len(self.bucket)


@dataclass(frozen=True)
class MultiArmCodebook:
    rows: tuple[MultiArmCodeword, ...]
    partition: BucketPartition
    codebook: SingleBeamCodebook

    @property
    def num_beams(self) -> int:
        return len(self.rows)

    def weight_matrix(self) -> np.ndarray:
        """(B, M*N) stack of synthesized weight vectors."""
        return np.array([cw.weights for cw in self.rows])


@dataclass(frozen=True)
class MainLobe:
    """Axis-aligned main-lobe box in (cos phi, u, r) coordinates."""

    cos_phi: tuple[float, float]
    u: tuple[float, float]
    r: tuple[float, float]  # upper bound may be inf


def synthesize(bucket, codebook: SingleBeamCodebook, phases=None) -> MultiArmCodeword:
    """Combine one bucket of codewords into a single transmit vector."""
    bucket = tuple(int(i) for i in bucket)
    if not bucket:
        raise ValueError("bucket must contain at least one codeword")
    arms = len(bucket)
    if phases is None:
        phases = np.zeros(arms)
    phases = np.asarray(phases, dtype=float)
    if phases.shape != (arms,):
        raise ValueError("one phase per sub-beam required")
    gains = np.exp(1j * phases) / math.sqrt(arms)
    weights = codebook.rows[list(bucket)].T @ gains
    return MultiArmCodeword(weights=weights, bucket=bucket, phases=phases)


def _point_steering(cfg: ArrayConfig, point) -> np.ndarray:
    r, theta, phi = point
    return steering_from_cosines(cfg, math.cos(phi), math.cos(theta) * math.sin(phi), r, mode="exact")


def pattern_multi(point, phases, bucket, codebook: SingleBeamCodebook, cfg: Optional[ArrayConfig] = None) -> float:
    """Normalized multi-arm power pattern at (r, theta, phi)."""
    cfg = cfg or codebook.cfg
    cw = synthesize(bucket, codebook, phases)
    a = _point_steering(cfg, point)
    return float(abs(np.vdot(a, cw.weights)) ** 2)


def pattern_single(point, s: int, codebook: SingleBeamCodebook, cfg: Optional[ArrayConfig] = None) -> float:
    """Normalized single-beam power pattern of codeword s at (r, theta, phi)."""
    cfg = cfg or codebook.cfg
    if not 0 <= s < codebook.size:
        raise ValueError("codeword index out of range")
    a = _point_steering(cfg, point)
    return float(abs(np.vdot(a, codebook.rows[s])) ** 2)


def main_lobe(s: int, codebook: SingleBeamCodebook, cfg: Optional[ArrayConfig] = None) -> MainLobe:
    """Main-lobe region of codeword s.

    Direction cosines extend one grid half-spacing (1/M, 1/N) either side. The
    distance interval follows the ring-criterion half-spacing bounds; the
    upper bound degenerates to inf where its denominator is nonpositive, and
    the whole interval is clipped to (r_min, inf). Far-field rows get
    [max(1/g, r_min), inf) with g the half ring spacing in 1/r.
    """
    cfg = cfg or codebook.cfg
    if not 0 <= s < codebook.size:
        raise ValueError("codeword index out of range")
    pt = codebook.points[s]
    cp_lo = max(-1.0, pt.cos_phi - 1.0 / cfg.m)
    cp_hi = min(1.0, pt.cos_phi + 1.0 / cfg.m)
    u_lo = max(-1.0, pt.u - 1.0 / cfg.n)
    u_hi = min(1.0, pt.u + 1.0 / cfg.n)
    r_min = codebook.r_min
    if codebook.zeta is None:
        r_iv = (r_min, math.inf)
    else:
        angle = AngleSample(iz=pt.iz, ix=pt.ix, cos_phi=pt.cos_phi, u=pt.u)
        spacing = _axis_spacing(cfg, angle, codebook.zeta, "auto")
        g = spacing / 2.0
        if math.isinf(pt.r):
            lo = max(1.0 / g if g > 0 else r_min, r_min)
            r_iv = (lo, math.inf)
        else:
            x = pt.r * g
            lo = (1.0 + x) / (1.0 / pt.r + 2.0 * g)
            lo = max(lo, r_min)
            den = 1.0 / pt.r - 2.0 * g
            num = 1.0 - x
            if den <= 1e-15 or num <= 0:
                hi = math.inf
            else:
                hi = num / den
                if hi < lo:
                    hi = math.inf
            r_iv = (lo, hi)
    return MainLobe(cos_phi=(cp_lo, cp_hi), u=(u_lo, u_hi), r=r_iv)


def _midpoints(lo: float, hi: float, count: int) -> np.ndarray:
    edges = np.linspace(lo, hi, count + 1)
    return 0.5 * (edges[:-1] + edges[1:])


class _LobeGrid:
    """Precomputed steering rows and single-beam pattern over one main lobe."""

    def __init__(self, s: int, codebook: SingleBeamCodebook, cfg: ArrayConfig, resolution: int):
        lobe = main_lobe(s, codebook, cfg)
        rho_hi = 1.0 / lobe.r[0]
        rho_lo = 0.0 if math.isinf(lobe.r[1]) else 1.0 / lobe.r[1]
        cps = _midpoints(*lobe.cos_phi, resolution)
        us = _midpoints(*lobe.u, resolution)
        rhos = _midpoints(rho_lo, rho_hi, resolution)
        rows = []
        for cp in cps:
            for u in us:
                for rho in rhos:
                    r = math.inf if rho == 0.0 else 1.0 / rho
                    rows.append(steering_from_cosines(cfg, cp, u, r, mode="exact"))
        self.conj_steering = np.conj(np.array(rows))
        self.single = np.abs(self.conj_steering @ codebook.rows[s]) ** 2
        self.denom = np.maximum(self.single, PATTERN_FLOOR)
        self.volume = (
            (lobe.cos_phi[1] - lobe.cos_phi[0]) * (lobe.u[1] - lobe.u[0]) * (rho_hi - rho_lo)
        )

    def integral(self, weights: np.ndarray) -> float:
        multi = np.abs(self.conj_steering @ weights) ** 2
        return float(np.mean(np.abs(multi - self.single) / self.denom) * self.volume)

    def integral_batch(self, weight_columns: np.ndarray) -> np.ndarray:
        """Integral per column of a (M*N, k) weight stack."""
        multi = np.abs(self.conj_steering @ weight_columns) ** 2
        rel = np.abs(multi - self.single[:, None]) / self.denom[:, None]
        return rel.mean(axis=0) * self.volume


def _bucket_grids(bucket, codebook, cfg, resolution):
    if resolution < 4:
        raise ValueError("at least 4 quadrature points per axis required")
    return [_LobeGrid(int(s), codebook, cfg, resolution) for s in bucket]


def deviation(
    phases,
    bucket,
    codebook: SingleBeamCodebook,
    cfg: Optional[ArrayConfig] = None,
    resolution: int = 8,
    _grids=None,
) -> float:
    """Mean main-lobe deviation between the multi-arm pattern and its sub-beams.

    Midpoint-rule discretization over each sub-beam's main-lobe box in
    (cos phi, u, 1/r); the single-beam pattern in the quotient is floored to
    avoid null blowups. Deterministic for fixed resolution.
    """
    cfg = cfg or codebook.cfg
    grids = _grids if _grids is not None else _bucket_grids(bucket, codebook, cfg, resolution)
    cw = synthesize(bucket, codebook, phases)
    return float(np.mean([g.integral(cw.weights) for g in grids]))


def optimize_phases(
    bucket,
    codebook: SingleBeamCodebook,
    cfg: Optional[ArrayConfig] = None,
    budget: Optional[int] = None,
    resolution: int = 8,
    restarts: int = 4,
    sweeps: int = 2,
    grid_points: int = 16,
    rng: Optional[np.random.Generator] = None,
) -> np.ndarray:
    """Coordinate-descent phase search; never worse than the all-zero phases.

    The first phase is pinned to 0 (global-phase gauge). Each remaining phase
    is swept over a uniform grid for a fixed number of passes, from the zero
    start plus random restarts. ``budget`` caps the number of deviation
    evaluations; the zero-phase candidate is always evaluated first.
    """
    if budget is not None and budget < 1:
        raise ValueError("budget must allow at least one evaluation")
    cfg = cfg or codebook.cfg
    bucket = tuple(int(i) for i in bucket)
    arms = len(bucket)
    if arms == 0:
        raise ValueError("bucket must contain at least one codeword")
    if arms == 1:
        return np.zeros(1)
    grids = _bucket_grids(bucket, codebook, cfg, resolution)
    rows = codebook.rows[list(bucket)]

    evals = 0

    def score_batch(phase_cols: np.ndarray) -> np.ndarray:
        """Deviation per column of an (arms, k) phase stack."""
        nonlocal evals
        evals += phase_cols.shape[1]
        w = rows.T @ (np.exp(1j * phase_cols) / math.sqrt(arms))
        return np.mean([g.integral_batch(w) for g in grids], axis=0)

    def score(ph):
        return float(score_batch(ph[:, None])[0])

    def exhausted():
        return budget is not None and evals >= budget

    best = np.zeros(arms)
    best_score = score(best)
    if rng is None:
        rng = np.random.default_rng(0x5EED)
    starts = [np.zeros(arms)]
    for _ in range(restarts):
        ph = rng.uniform(0.0, 2 * math.pi, size=arms)
        ph[0] = 0.0
        starts.append(ph)
    grid = np.linspace(0.0, 2 * math.pi, grid_points, endpoint=False)
    for start in starts:
        if exhausted():
            break
        current = start.copy()
        cur_score = best_score if np.array_equal(current, best) else score(current)
        if cur_score < best_score:
            best, best_score = current.copy(), cur_score
        for _ in range(sweeps):
            for i in range(1, arms):
                if exhausted():
                    break
                take = grid_points if budget is None else max(0, min(grid_points, budget - evals))
                if take == 0:
                    break
                cands = np.repeat(current[:, None], take, axis=1)
                cands[i] = grid[:take]
                scores = score_batch(cands)
                j = int(np.argmin(scores))
                if scores[j] < cur_score:
                    current = cands[:, j].copy()
                    cur_score = float(scores[j])
            if exhausted():
                break
        if cur_score < best_score:
            best, best_score = current.copy(), cur_score
    return best


def build_multiarm_codebook(
    part: BucketPartition,
    codebook: SingleBeamCodebook,
    cfg: Optional[ArrayConfig] = None,
    optimize: bool = False,
    resolution: int = 8,
    budget: Optional[int] = None,
) -> MultiArmCodebook:
    """One synthesized row per bucket, in bucket order."""
    cfg = cfg or codebook.cfg
    if part.universe != codebook.size:
        raise ValueError("partition universe must match the codebook size")
    rows = []
    for members in part.buckets:
        if optimize and len(members) >= 2:
            phases = optimize_phases(members, codebook, cfg, budget=budget, resolution=resolution)
        else:
            phases = np.zeros(len(members))
        rows.append(synthesize(members, codebook, phases))
    return MultiArmCodebook(rows=tuple(rows), partition=part, codebook=codebook)

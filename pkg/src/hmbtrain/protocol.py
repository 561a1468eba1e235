"""Multi-AP beam training: scheduling, scanning, soft-decision demultiplexing,
voting, and the baseline trainers.

Every AP draws independent hash partitions per round and sweeps its multi-arm
beams simultaneously with the others, so a full scan costs B*L slots no matter
how many APs participate. The user never needs phases: slots are ranked by
received power, split between APs strongest-first, and each AP's aligned
codeword is the index that keeps appearing in its assigned buckets.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .array_model import ChannelRealization, complex_noise
from .hash_family import BucketPartition, PolynomialHash, partition, sample_hash
from .multibeam import MultiArmCodebook, build_multiarm_codebook, synthesize
from .polar_codebook import SingleBeamCodebook


@dataclass(frozen=True)
class ApSchedule:
    """Per-AP training material: one hash/partition/beam codebook per round."""

    hashes: tuple[PolynomialHash, ...]
    partitions: tuple[BucketPartition, ...]
    beams: tuple[MultiArmCodebook, ...]
    weight_stacks: tuple[np.ndarray, ...]  # per round: (B, M*N)


@dataclass(frozen=True)
class ScanSchedule:
    aps: tuple[ApSchedule, ...]
    num_rounds: int
    num_buckets: int
    codebook: SingleBeamCodebook

    @property
    def num_aps(self) -> int:
        return len(self.aps)

    @property
    def num_slots(self) -> int:
        return self.num_rounds * self.num_buckets


@dataclass(frozen=True)
class PowerMeasurements:
    """Received powers on the (round, bucket) slot grid for one user."""

    grid: np.ndarray  # (L, B), nonnegative
    user: int = 0

    def __post_init__(self):
        if self.grid.ndim != 2:
            raise ValueError("power measurements form a (rounds, buckets) grid")
        if (self.grid < 0).any():
            raise ValueError("received powers must be nonnegative")

    @property
    def flat(self) -> np.ndarray:
        """Slot-ordered view; slot q = l * B + b."""
        return self.grid.reshape(-1)


@dataclass(frozen=True)
class TrainingResult:
    method: str
    gamma: np.ndarray  # identified codeword index per AP
    slots: Optional[tuple[tuple[int, ...], ...]]  # assigned slots per AP
    tallies: Optional[tuple[np.ndarray, ...]]  # vote counts per AP
    overhead: int


def best_codeword(codebook: SingleBeamCodebook, channel: ChannelRealization) -> int:
    """Noiseless oracle: the codeword with the largest matched power."""
    return int(np.argmax(codebook.matched_powers(channel.vector)))


def build_schedule(
    num_aps: int,
    num_rounds: int,
    num_buckets: int,
    codebook: SingleBeamCodebook,
    rng: np.random.Generator,
    order: int = 2,
    optimize_beams: bool = False,
    partition_mode: str = "balanced",
) -> ScanSchedule:
    """Draw per-AP rounds of distinct hashes and synthesize their beams."""
    if num_rounds < 1:
        raise ValueError("at least one hash round required")
    if num_buckets < 2:
        raise ValueError("at least two buckets required")
    aps = []
    for _ in range(num_aps):
        hashes: list[PolynomialHash] = []
        seen = set()
        while len(hashes) < num_rounds:
            h = sample_hash(rng, order, codebook.size, num_buckets)
            if h.coeffs in seen:
                continue  # the L functions per AP must be distinct
            seen.add(h.coeffs)
            hashes.append(h)
        parts = tuple(partition(h, codebook.size, num_buckets, mode=partition_mode) for h in hashes)
        beams = tuple(build_multiarm_codebook(p, codebook, optimize=optimize_beams) for p in parts)
        stacks = tuple(b.weight_matrix() for b in beams)
        aps.append(ApSchedule(hashes=tuple(hashes), partitions=parts, beams=beams, weight_stacks=stacks))
    return ScanSchedule(
        aps=tuple(aps), num_rounds=num_rounds, num_buckets=num_buckets, codebook=codebook
    )


def scan(
    schedule: ScanSchedule,
    channels: list[ChannelRealization],
    p0: float,
    noise_power: float,
    rng: np.random.Generator,
) -> PowerMeasurements:
    """Superimposed received power for every (round, bucket) slot.

    All APs transmit sqrt(P0) through their slot beams simultaneously; noise is
    drawn independently per slot.
    """
    if len(channels) != schedule.num_aps:
        raise ValueError("one channel per AP required")
    amps = np.zeros((schedule.num_rounds, schedule.num_buckets), dtype=complex)
    for ap, ch in zip(schedule.aps, channels):
        hconj = np.conj(ch.vector)
        for l in range(schedule.num_rounds):
            amps[l] += ap.weight_stacks[l] @ hconj
    noise = complex_noise(rng, noise_power, size=amps.shape)
    grid = np.abs(amps * math.sqrt(p0) + noise) ** 2
    return PowerMeasurements(grid=grid)


def soft_demux(
    powers: PowerMeasurements,
    num_aps: int,
    num_rounds: int,
    mode: str = "plain",
) -> list[tuple[int, ...]]:
    """Split the strongest slots between APs, strongest AP first.

    Plain mode hands ranks (k-1)L+1..kL of the descending power ordering to the
    k-th strongest AP. Round-constrained mode assigns greedily by descending
    power but never gives one AP two slots of the same round. Ties break toward
    the smaller slot index. Returns slot tuples indexed by strength rank.
    """
    flat = powers.flat
    num_buckets = powers.grid.shape[1]
    if num_aps * num_rounds > flat.size:
        raise ValueError("more assignments requested than scan slots")
    ranked = sorted(range(flat.size), key=lambda q: (-flat[q], q))
    if mode == "plain":
        return [tuple(sorted(ranked[k * num_rounds : (k + 1) * num_rounds])) for k in range(num_aps)]
    if mode == "round_constrained":
        taken = set()
        out = []
        for _ in range(num_aps):
            rounds_used = set()
            mine = []
            for q in ranked:
                if q in taken or q // num_buckets in rounds_used:
                    continue
                mine.append(q)
                taken.add(q)
                rounds_used.add(q // num_buckets)
                if len(mine) == num_rounds:
                    break
            if len(mine) < num_rounds:
                raise ValueError("cannot satisfy one-slot-per-round assignment")
            out.append(tuple(sorted(mine)))
        return out
    raise ValueError(f"unknown demux mode {mode!r}")


def vote(
    partitions,
    slots,
    num_buckets: int,
) -> tuple[int, np.ndarray]:
    """Tally bucket memberships over the assigned slots.

    Every member of every assigned slot's bucket receives one vote; the winner
    is the most-voted index, ties broken toward the smallest index.
    """
    if not slots:
        raise ValueError("at least one assigned slot required")
    universe = partitions[0].universe
    tallies = np.zeros(universe, dtype=np.int64)
    for q in slots:
        l, b = divmod(q, num_buckets)
        for member in partitions[l].buckets[b]:
            tallies[member] += 1
    return int(np.argmax(tallies)), tallies


def _gain_order(channels) -> list[int]:
    """AP indices sorted by channel gain, strongest first (oracle labeling)."""
    return sorted(range(len(channels)), key=lambda k: (-channels[k].gain, k))


def hmb_identify(
    schedule: ScanSchedule,
    channels,
    powers: PowerMeasurements,
    demux_mode: str = "plain",
) -> TrainingResult:
    """Soft-decision identification from recorded slot powers."""
    num_aps = schedule.num_aps
    assignments = soft_demux(powers, num_aps, schedule.num_rounds, mode=demux_mode)
    order = _gain_order(channels)
    gamma = np.zeros(num_aps, dtype=np.int64)
    slots: list[tuple[int, ...]] = [()] * num_aps
    tallies: list[np.ndarray] = [None] * num_aps  # type: ignore[list-item]
    for rank, ap in enumerate(order):
        g, t = vote(schedule.aps[ap].partitions, assignments[rank], schedule.num_buckets)
        gamma[ap] = g
        slots[ap] = assignments[rank]
        tallies[ap] = t
    return TrainingResult(
        method="hmb",
        gamma=gamma,
        slots=tuple(slots),
        tallies=tuple(tallies),
        overhead=schedule.num_slots,
    )


def hmb_train(
    schedule: ScanSchedule,
    channels,
    p0: float,
    noise_power: float,
    rng: np.random.Generator,
    demux_mode: str = "plain",
) -> TrainingResult:
    """Full soft-decision pipeline: scan, demultiplex, vote."""
    powers = scan(schedule, channels, p0, noise_power, rng)
    return hmb_identify(schedule, channels, powers, demux_mode=demux_mode)


def hmb_hard_identify(
    schedule: ScanSchedule,
    powers: PowerMeasurements,
    threshold: float = 0.5,
    reference_power: Optional[float] = None,
) -> TrainingResult:
    """Hard-decision variant: slots above a fixed power level vote, no
    demultiplexing.

    The threshold is absolute: threshold * reference_power, with the reference
    calibrated in advance (the harness uses the nominal expected slot power of
    the scenario). It cannot follow per-trial noise or distance changes, which
    is what separates it from the rank-based soft decision. Without an
    explicit reference the strongest recorded slot is used.
    """
    if not 0.0 < threshold < 1.0:
        raise ValueError("threshold must lie in (0, 1)")
    num_aps = schedule.num_aps
    universe = schedule.codebook.size
    if reference_power is None:
        reference_power = float(powers.grid.max())
    active = powers.grid >= threshold * reference_power
    gamma = np.zeros(num_aps, dtype=np.int64)
    tallies = []
    for ap in range(num_aps):
        t = np.zeros(universe, dtype=np.int64)
        for l in range(schedule.num_rounds):
            for b in np.flatnonzero(active[l]):
                for member in schedule.aps[ap].partitions[l].buckets[b]:
                    t[member] += 1
        gamma[ap] = int(np.argmax(t))
        tallies.append(t)
    return TrainingResult(
        method="hmb_hard",
        gamma=gamma,
        slots=None,
        tallies=tuple(tallies),
        overhead=schedule.num_slots,
    )


def hmb_hard_train(
    schedule: ScanSchedule,
    channels,
    p0: float,
    noise_power: float,
    rng: np.random.Generator,
    threshold: float = 0.5,
    reference_power: Optional[float] = None,
) -> TrainingResult:
    powers = scan(schedule, channels, p0, noise_power, rng)
    return hmb_hard_identify(schedule, powers, threshold=threshold, reference_power=reference_power)


def exhaustive_train(
    codebook: SingleBeamCodebook,
    channels,
    p0: float,
    noise_power: float,
    rng: np.random.Generator,
) -> TrainingResult:
    """Per-AP sequential sweep over every codeword; argmax power wins."""
    gamma = np.zeros(len(channels), dtype=np.int64)
    for k, ch in enumerate(channels):
        amps = codebook.rows @ np.conj(ch.vector)
        noise = complex_noise(rng, noise_power, size=codebook.size)
        slot_powers = np.abs(amps * math.sqrt(p0) + noise) ** 2
        gamma[k] = int(np.argmax(slot_powers))
    return TrainingResult(
        method="exhaustive",
        gamma=gamma,
        slots=None,
        tallies=None,
        overhead=codebook.size * len(channels),
    )


def interleaved_buckets(universe: int, num_buckets: int) -> tuple[tuple[int, ...], ...]:
    """Deterministic equal-interval partition: bucket b holds i = b (mod B)."""
    return tuple(tuple(range(b, universe, num_buckets)) for b in range(num_buckets))


def eimb_train(
    codebook: SingleBeamCodebook,
    channels,
    num_buckets: int,
    num_rounds: int,
    threshold: float,
    p0: float,
    noise_power: float,
    rng: np.random.Generator,
) -> TrainingResult:
    """Equal-interval multi-arm baseline with hard threshold decisions.

    Buckets are the fixed interleaved partition reused every round; each AP
    sweeps alone (overhead B*L per AP). A bucket is active in a round when its
    power reaches threshold * (round max); active members collect votes.
    """
    if not 0.0 < threshold < 1.0:
        raise ValueError("threshold must lie in (0, 1)")
    buckets = interleaved_buckets(codebook.size, num_buckets)
    stack = np.array([synthesize(members, codebook).weights for members in buckets])
    gamma = np.zeros(len(channels), dtype=np.int64)
    tallies_out = []
    for k, ch in enumerate(channels):
        amps = stack @ np.conj(ch.vector)
        t = np.zeros(codebook.size, dtype=np.int64)
        for _ in range(num_rounds):
            noise = complex_noise(rng, noise_power, size=num_buckets)
            powers = np.abs(amps * math.sqrt(p0) + noise) ** 2
            active = powers >= threshold * powers.max()
            for b in np.flatnonzero(active):
                for member in buckets[b]:
                    t[member] += 1
        gamma[k] = int(np.argmax(t))
        tallies_out.append(t)
    return TrainingResult(
        method="eimb",
        gamma=gamma,
        slots=None,
        tallies=tuple(tallies_out),
        overhead=num_buckets * num_rounds * len(channels),
    )


def hoeffding_round_terms(
    m_s: float,
    p_max_s: float,
    p_min_s: float,
    p_max_ns: float,
    p_min_ns: float,
    t0: float,
    t_sig: float,
    t_noise: float,
) -> tuple[float, float]:
    """Un-ceiled (signal, noise) round counts from the concentration bound."""
    if m_s < 1:
        raise ValueError("target inverse error must be at least 1")
    for lo, hi, name in ((p_min_s, p_max_s, "signal"), (p_min_ns, p_max_ns, "noise")):
        if not (math.isfinite(lo) and math.isfinite(hi)) or lo > hi:
            raise ValueError(f"{name} power bounds must be finite and ordered")
    if not t_noise < t0 < t_sig:
        raise ValueError("thresholds must satisfy noise mean < T0 < signal mean")
    log_m = math.log(m_s)
    l_sig = log_m * (p_max_s - p_min_s) ** 2 / (2.0 * (t0 - t_sig) ** 2)
    l_noise = log_m * (p_max_ns - p_min_ns) ** 2 / (2.0 * (t0 - t_noise) ** 2)
    return l_sig, l_noise


def required_rounds(
    m_s: float,
    p_max_s: float,
    p_min_s: float,
    p_max_ns: float,
    p_min_ns: float,
    t0: float,
    t_sig: float,
    t_noise: float,
) -> int:
    """Hash rounds needed to push the misidentification rate below 1/m_s."""
    l_sig, l_noise = hoeffding_round_terms(
        m_s, p_max_s, p_min_s, p_max_ns, p_min_ns, t0, t_sig, t_noise
    )
    return math.ceil(l_sig + l_noise)

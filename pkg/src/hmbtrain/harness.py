"""Experiment configuration, Monte Carlo sweeps, metrics, and result emission.

A sweep crosses the configured SNR/bucket/round axes, runs independent trials
at each point (per-trial seeds spawned from the master seed by counter, trials
reduced in index order), and scores every requested method per (trial, AP): a
success means the identified index equals the noiseless matched-power argmax
over that method's own codebook. Results land in a fixed-schema table that can
be emitted as CSV, JSON, or vector plots.
"""

from __future__ import annotations

import dataclasses
import json
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .array_model import ArrayConfig, ChannelRealization, los_channel
from .polar_codebook import SingleBeamCodebook, build_codebook, dft_codebook
from . import protocol as proto

CSV_HEADER = "method,snr_db,B,L,trials,accuracy,rate_bps_hz,overhead_slots,seed"
METHOD_ORDER = ("hmb", "hmb_hard", "eimb", "exhaustive", "exhaustive_dft")


def db_to_linear(db: float) -> float:
    return 10.0 ** (db / 10.0)


def linear_to_db(x: float) -> float:
    return 10.0 * math.log10(x)


@dataclass
class ArraySettings:
    m: int = 4
    n: int = 32
    f_c_hz: float = 28e9
    d_x_m: Optional[float] = None  # None -> half wavelength
    d_z_m: Optional[float] = None

    def build(self) -> ArrayConfig:
        lam = 299_792_458.0 / self.f_c_hz
        return ArrayConfig(
            m=self.m,
            n=self.n,
            d_x=self.d_x_m if self.d_x_m is not None else lam / 2,
            d_z=self.d_z_m if self.d_z_m is not None else lam / 2,
            wavelength=lam,
            freq=self.f_c_hz,
        )


@dataclass
class ScenarioSettings:
    num_aps: int = 2
    rho0_db: float = -72.0
    p0_dbm: float = 15.0
    sigma2_dbm: float = -70.0
    r0_m: float = 3.0
    user_r_range_m: Optional[tuple[float, float]] = None  # None -> codebook span


@dataclass
class CodebookSettings:
    delta: float = 0.5
    r_min_m: Optional[float] = None
    r_max_m: Optional[float] = None
    far_field_only: bool = False
    ring_axis: str = "auto"


@dataclass
class ProtocolSettings:
    num_buckets: int = 16
    num_rounds: int = 6
    hash_order: int = 2
    demux: str = "plain"
    threshold: float = 0.5
    optimize_phases: bool = False
    methods: tuple[str, ...] = ("hmb", "hmb_hard", "eimb", "exhaustive")


@dataclass
class SweepSettings:
    snr_db: tuple[float, ...] = (-10.0, -5.0, 0.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0)
    num_buckets: Optional[tuple[int, ...]] = None  # None -> protocol value only
    num_rounds: Optional[tuple[int, ...]] = None


@dataclass
class ExperimentConfig:
    array: ArraySettings = field(default_factory=ArraySettings)
    scenario: ScenarioSettings = field(default_factory=ScenarioSettings)
    codebook: CodebookSettings = field(default_factory=CodebookSettings)
    protocol: ProtocolSettings = field(default_factory=ProtocolSettings)
    sweep: SweepSettings = field(default_factory=SweepSettings)
    trials: int = 500
    master_seed: int = 1

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError("at least one trial required")
        if not self.sweep.snr_db:
            raise ValueError("SNR sweep list must be nonempty")
        unknown = set(self.protocol.methods) - set(METHOD_ORDER)
        if unknown:
            raise ValueError(f"unimplemented methods requested: {sorted(unknown)}")

    @classmethod
    def paper_profile(cls) -> "ExperimentConfig":
        """Full-scale profile: larger array and AP count, minutes-to-hours runs."""
        return cls(
            array=ArraySettings(m=4, n=128),
            scenario=ScenarioSettings(num_aps=5),
            protocol=ProtocolSettings(num_buckets=32, num_rounds=6),
        )

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        def tup(v):
            return tuple(v) if isinstance(v, list) else v

        kwargs = {}
        for name, sub in (
            ("array", ArraySettings),
            ("scenario", ScenarioSettings),
            ("codebook", CodebookSettings),
            ("protocol", ProtocolSettings),
            ("sweep", SweepSettings),
        ):
            if name in data:
                section = {k: tup(v) for k, v in data[name].items()}
                kwargs[name] = sub(**section)
        for name in ("trials", "master_seed"):
            if name in data:
                kwargs[name] = data[name]
        return cls(**kwargs)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_json(cls, path) -> "ExperimentConfig":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))

    def to_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")


@dataclass(frozen=True)
class ResultRow:
    method: str
    snr_db: float
    num_buckets: int
    num_rounds: int
    trials: int
    accuracy: float
    rate_bps_hz: float
    overhead_slots: int
    seed: int

    def __post_init__(self):
        if not 0.0 <= self.accuracy <= 1.0:
            raise ValueError("accuracy must lie in [0, 1]")
        if self.overhead_slots < 1:
            raise ValueError("overhead must be a positive slot count")

    def csv_line(self) -> str:
        # repr floats round-trip exactly, keeping parse(emit(t)) == t
        return (
            f"{self.method},{self.snr_db!r},{self.num_buckets},{self.num_rounds},"
            f"{self.trials},{self.accuracy!r},{self.rate_bps_hz!r},"
            f"{self.overhead_slots},{self.seed}"
        )


@dataclass
class ResultTable:
    rows: list[ResultRow]
    metadata: dict = field(default_factory=dict)

    def to_csv(self) -> str:
        return "\n".join([CSV_HEADER] + [r.csv_line() for r in self.rows]) + "\n"


def reference_snr_linear(p0: float, m: int, n: int, rho0: float, r0: float, sigma2: float) -> float:
    """P0 M N rho0 / (r0^2 sigma^2), all linear."""
    if min(p0, rho0, r0, sigma2) <= 0:
        raise ValueError("all reference-SNR inputs must be positive")
    return p0 * m * n * rho0 / (r0**2 * sigma2)


def reference_snr(cfg: ExperimentConfig) -> float:
    """Linear reference SNR of the configured scenario at r0."""
    return reference_snr_linear(
        db_to_linear(cfg.scenario.p0_dbm),
        cfg.array.m,
        cfg.array.n,
        db_to_linear(cfg.scenario.rho0_db),
        cfg.scenario.r0_m,
        db_to_linear(cfg.scenario.sigma2_dbm),
    )


def reference_snr_db(cfg: ExperimentConfig) -> float:
    return linear_to_db(reference_snr(cfg))


def noise_power_for_snr(p0: float, m: int, n: int, rho0: float, r0: float, snr_linear: float) -> float:
    """Noise power that realizes a target reference SNR at distance r0."""
    return p0 * m * n * rho0 / (r0**2 * snr_linear)


def achievable_rate(weights: np.ndarray, direction: np.ndarray, snr_linear: float) -> float:
    """log2(1 + gamma |<direction, weights>|^2) with a unit-norm channel direction."""
    norm = np.linalg.norm(direction)
    if abs(norm - 1.0) > 1e-6:
        raise ValueError("channel direction must be unit norm")
    gain = abs(np.vdot(direction, weights)) ** 2
    return math.log2(1.0 + snr_linear * gain)


def overhead(method: str, num_codewords: int, num_aps: int, num_buckets: int, num_rounds: int) -> int:
    """Scan slots consumed by one full training pass."""
    if method in ("hmb", "hmb_hard"):
        return num_buckets * num_rounds
    if method in ("exhaustive", "exhaustive_dft"):
        return num_codewords * num_aps
    if method == "eimb":
        return num_buckets * num_rounds * num_aps
    raise ValueError(f"unknown training method {method!r}")


def _draw_geometry(rng, pol: SingleBeamCodebook, r_range, num_aps):
    """Per-AP user coordinates: log-uniform distance, uniform direction cosines."""
    cos_grid = sorted({pt.cos_phi for pt in pol.points})
    placements = []
    resamples = 0
    for _ in range(num_aps):
        while True:
            r = math.exp(rng.uniform(math.log(r_range[0]), math.log(r_range[1])))
            if r >= pol.r_min:
                break
            resamples += 1
        cos_phi = rng.uniform(cos_grid[0], cos_grid[-1])
        sin_phi = math.sqrt(1.0 - cos_phi**2)
        bound = min(sin_phi, (pol.cfg.n - 1) / pol.cfg.n)
        u = rng.uniform(-bound, bound)
        theta = math.acos(u / sin_phi)
        phi = math.acos(cos_phi)
        placements.append((r, theta, phi))
    return placements, resamples


def _rate_for(ch: ChannelRealization, row: np.ndarray, snr_linear: float) -> float:
    direction = ch.vector / np.linalg.norm(ch.vector)
    return achievable_rate(row, direction, snr_linear)


def run_sweep(cfg: ExperimentConfig) -> ResultTable:
    """Monte Carlo accuracy/rate table over the configured sweep axes."""
    array = cfg.array.build()
    pol = build_codebook(
        array,
        delta=cfg.codebook.delta,
        r_min=cfg.codebook.r_min_m,
        r_max=cfg.codebook.r_max_m,
        far_field_only=cfg.codebook.far_field_only,
        axis=cfg.codebook.ring_axis,
    )
    methods = [m for m in METHOD_ORDER if m in cfg.protocol.methods]
    dft = dft_codebook(array) if "exhaustive_dft" in methods else None
    r_range = cfg.scenario.user_r_range_m or (pol.r_min, pol.r_max)
    if not r_range[0] < r_range[1]:
        raise ValueError(
            "user distance range is empty; set scenario.user_r_range_m explicitly "
            "(small arrays have no radiating near-field span)"
        )
    p0 = db_to_linear(cfg.scenario.p0_dbm)
    rho0 = db_to_linear(cfg.scenario.rho0_db)
    num_aps = cfg.scenario.num_aps
    bucket_axis = cfg.sweep.num_buckets or (cfg.protocol.num_buckets,)
    round_axis = cfg.sweep.num_rounds or (cfg.protocol.num_rounds,)
    points = [
        (snr, b, l)
        for snr in cfg.sweep.snr_db
        for b in bucket_axis
        for l in round_axis
    ]
    rows: list[ResultRow] = []
    total_resamples = 0
    sigma2_nominal = db_to_linear(cfg.scenario.sigma2_dbm)
    for pi, (snr_db, num_buckets, num_rounds) in enumerate(points):
        snr_lin = db_to_linear(snr_db)
        hits = {m: 0 for m in methods}
        rate_sums = {m: 0.0 for m in methods}
        # hard decisions compare against a level fixed before the campaign:
        # the nominal aligned slot power at r0 plus the nominal noise floor
        mean_arms = pol.size / num_buckets
        hard_reference = (
            p0 * array.size * rho0 / cfg.scenario.r0_m**2 / mean_arms + sigma2_nominal
        )
        for trial in range(cfg.trials):
            ss = np.random.SeedSequence(cfg.master_seed, spawn_key=(pi, trial))
            kids = [np.random.default_rng(c) for c in ss.spawn(6)]
            placements, resampled = _draw_geometry(kids[0], pol, r_range, num_aps)
            total_resamples += resampled
            channels = [
                los_channel(array, r, theta, phi, rho0, ap_index=k)
                for k, (r, theta, phi) in enumerate(placements)
            ]
            nearest = min(r for r, _, _ in placements)
            sigma2 = noise_power_for_snr(p0, array.m, array.n, rho0, nearest, snr_lin)
            snr_at = [
                reference_snr_linear(p0, array.m, array.n, rho0, r, sigma2)
                for r, _, _ in placements
            ]
            oracle = [proto.best_codeword(pol, ch) for ch in channels]
            results: dict[str, proto.TrainingResult] = {}
            if "hmb" in methods or "hmb_hard" in methods:
                schedule = proto.build_schedule(
                    num_aps,
                    num_rounds,
                    num_buckets,
                    pol,
                    kids[1],
                    order=cfg.protocol.hash_order,
                    optimize_beams=cfg.protocol.optimize_phases,
                )
                powers = proto.scan(schedule, channels, p0, sigma2, kids[2])
                if "hmb" in methods:
                    results["hmb"] = proto.hmb_identify(
                        schedule, channels, powers, demux_mode=cfg.protocol.demux
                    )
                if "hmb_hard" in methods:
                    results["hmb_hard"] = proto.hmb_hard_identify(
                        schedule,
                        powers,
                        threshold=cfg.protocol.threshold,
                        reference_power=hard_reference,
                    )
            if "eimb" in methods:
                results["eimb"] = proto.eimb_train(
                    pol, channels, num_buckets, num_rounds,
                    cfg.protocol.threshold, p0, sigma2, kids[3],
                )
            if "exhaustive" in methods:
                results["exhaustive"] = proto.exhaustive_train(pol, channels, p0, sigma2, kids[4])
            if "exhaustive_dft" in methods:
                results["exhaustive_dft"] = proto.exhaustive_train(dft, channels, p0, sigma2, kids[5])
            for m in methods:
                res = results[m]
                book = dft if m == "exhaustive_dft" else pol
                target = (
                    [proto.best_codeword(dft, ch) for ch in channels]
                    if m == "exhaustive_dft"
                    else oracle
                )
                for k, ch in enumerate(channels):
                    if int(res.gamma[k]) == target[k]:
                        hits[m] += 1
                    rate_sums[m] += _rate_for(ch, book.rows[res.gamma[k]], snr_at[k])
        for m in methods:
            rows.append(
                ResultRow(
                    method=m,
                    snr_db=snr_db,
                    num_buckets=num_buckets,
                    num_rounds=num_rounds,
                    trials=cfg.trials,
                    accuracy=hits[m] / (cfg.trials * num_aps),
                    rate_bps_hz=rate_sums[m] / (cfg.trials * num_aps),
                    overhead_slots=overhead(
                        m,
                        (dft.size if m == "exhaustive_dft" else pol.size),
                        num_aps,
                        num_buckets,
                        num_rounds,
                    ),
                    seed=cfg.master_seed,
                )
            )
    meta = {
        "num_codewords": pol.size,
        "dft_codewords": dft.size if dft is not None else array.size,
        "num_aps": num_aps,
        "p0_mw": p0,
        "rho0": rho0,
        "mn": array.size,
        "sigma2_mw": db_to_linear(cfg.scenario.sigma2_dbm),
        "resampled_trials": total_resamples,
    }
    return ResultTable(rows=rows, metadata=meta)


def run_single(cfg: ExperimentConfig, trace_path=None) -> dict:
    """One seeded training pass at the configured scenario noise, with an
    optional text trace of slot powers, assignments, and tallies."""
    array = cfg.array.build()
    pol = build_codebook(
        array,
        delta=cfg.codebook.delta,
        r_min=cfg.codebook.r_min_m,
        r_max=cfg.codebook.r_max_m,
        far_field_only=cfg.codebook.far_field_only,
        axis=cfg.codebook.ring_axis,
    )
    r_range = cfg.scenario.user_r_range_m or (pol.r_min, pol.r_max)
    p0 = db_to_linear(cfg.scenario.p0_dbm)
    rho0 = db_to_linear(cfg.scenario.rho0_db)
    sigma2 = db_to_linear(cfg.scenario.sigma2_dbm)
    ss = np.random.SeedSequence(cfg.master_seed, spawn_key=(0, 0))
    kids = [np.random.default_rng(c) for c in ss.spawn(3)]
    placements, _ = _draw_geometry(kids[0], pol, r_range, cfg.scenario.num_aps)
    channels = [
        los_channel(array, r, theta, phi, rho0, ap_index=k)
        for k, (r, theta, phi) in enumerate(placements)
    ]
    schedule = proto.build_schedule(
        cfg.scenario.num_aps,
        cfg.protocol.num_rounds,
        cfg.protocol.num_buckets,
        pol,
        kids[1],
        order=cfg.protocol.hash_order,
        optimize_beams=cfg.protocol.optimize_phases,
    )
    powers = proto.scan(schedule, channels, p0, sigma2, kids[2])
    result = proto.hmb_identify(schedule, channels, powers, demux_mode=cfg.protocol.demux)
    oracle = [proto.best_codeword(pol, ch) for ch in channels]
    # superposition diagnostic: slot power predicted by summing per-AP pattern
    # powers vs the coherent multi-AP amplitude (noiseless)
    per_ap = np.zeros((cfg.scenario.num_aps,) + powers.grid.shape)
    coherent = np.zeros(powers.grid.shape, dtype=complex)
    for k, (ap, ch) in enumerate(zip(schedule.aps, channels)):
        for l in range(schedule.num_rounds):
            amp = ap.weight_stacks[l] @ np.conj(ch.vector)
            per_ap[k, l] = np.abs(amp) ** 2 * p0
            coherent[l] += amp
    coherent_power = np.abs(coherent) ** 2 * p0
    gap = np.abs(coherent_power - per_ap.sum(axis=0))
    denom = np.maximum(per_ap.sum(axis=0), per_ap.sum(axis=0).max() * 1e-12)
    summary = {
        "placements": placements,
        "identified": [int(g) for g in result.gamma],
        "oracle": oracle,
        "success": [int(g) == o for g, o in zip(result.gamma, oracle)],
        "overhead": result.overhead,
        "superposition_gap": float(np.mean(gap / denom)),
    }
    if trace_path is not None:
        with open(trace_path, "w") as fh:
            fh.write(f"# slots {schedule.num_slots} rounds {schedule.num_rounds} buckets {schedule.num_buckets}\n")
            for l in range(schedule.num_rounds):
                line = " ".join(f"{v:.12g}" for v in powers.grid[l])
                fh.write(f"power round {l}: {line}\n")
            for k in range(cfg.scenario.num_aps):
                fh.write(f"ap {k} slots: {','.join(str(q) for q in result.slots[k])}\n")
                top = np.argsort(-result.tallies[k], kind="stable")[:5]
                tally_txt = " ".join(f"{int(i)}:{int(result.tallies[k][i])}" for i in top)
                fh.write(f"ap {k} tallies: {tally_txt}\n")
                fh.write(
                    f"ap {k} identified {int(result.gamma[k])} oracle {oracle[k]} "
                    f"success {summary['success'][k]}\n"
                )
            fh.write(f"superposition_gap {summary['superposition_gap']:.6g}\n")
    return summary


def read_table(path) -> ResultTable:
    """Parse a CSV produced by :func:`emit` back into a table."""
    with open(path) as fh:
        header = fh.readline().strip()
        if header != CSV_HEADER:
            raise ValueError("unexpected CSV header")
        rows = []
        for line in fh:
            if not line.strip():
                continue
            parts = line.strip().split(",")
            rows.append(
                ResultRow(
                    method=parts[0],
                    snr_db=float(parts[1]),
                    num_buckets=int(parts[2]),
                    num_rounds=int(parts[3]),
                    trials=int(parts[4]),
                    accuracy=float(parts[5]),
                    rate_bps_hz=float(parts[6]),
                    overhead_slots=int(parts[7]),
                    seed=int(parts[8]),
                )
            )
    return ResultTable(rows=rows)


FIGURE_FAMILIES = (
    "accuracy_vs_snr",
    "accuracy_vs_buckets",
    "rate_vs_snr",
    "rate_vs_distance",
    "overhead_vs_codebook_size",
)


def _render_plots(table: ResultTable, outdir) -> list:
    import os

    import matplotlib

    matplotlib.use("Agg", force=True)
    import matplotlib.pyplot as plt

    plt.rcParams["svg.hashsalt"] = "hmbtrain"
    os.makedirs(outdir, exist_ok=True)
    by_method: dict[str, list[ResultRow]] = {}
    for row in table.rows:
        by_method.setdefault(row.method, []).append(row)
    written = []

    def save(fig, name):
        path = os.path.join(outdir, f"{name}.svg")
        fig.savefig(path, format="svg", metadata={"Date": None})
        plt.close(fig)
        written.append(path)

    def line_plot(xattr, yattr, xlabel, ylabel, name, xmap=None):
        fig, ax = plt.subplots(figsize=(6, 4))
        for method in sorted(by_method):
            rows = sorted(by_method[method], key=lambda r: getattr(r, xattr))
            xs = [getattr(r, xattr) for r in rows]
            if xmap is not None:
                xs = [xmap(x) for x in xs]
            ys = [getattr(r, yattr) for r in rows]
            ax.plot(xs, ys, marker="o", label=method)
        ax.set_xlabel(xlabel)
        ax.set_ylabel(ylabel)
        ax.grid(True, alpha=0.4)
        ax.legend()
        save(fig, name)

    line_plot("snr_db", "accuracy", "reference SNR (dB)", "identification accuracy", "accuracy_vs_snr")
    line_plot("num_buckets", "accuracy", "buckets B", "identification accuracy", "accuracy_vs_buckets")
    line_plot("snr_db", "rate_bps_hz", "reference SNR (dB)", "achievable rate (bps/Hz)", "rate_vs_snr")

    meta = table.metadata
    if {"p0_mw", "rho0", "mn", "sigma2_mw"} <= set(meta):
        const = meta["p0_mw"] * meta["mn"] * meta["rho0"] / meta["sigma2_mw"]

        def to_distance(snr_db):
            return math.sqrt(const / db_to_linear(snr_db))

        line_plot(
            "snr_db",
            "rate_bps_hz",
            "AP-user distance implied by the SNR axis (m)",
            "achievable rate (bps/Hz)",
            "rate_vs_distance",
            xmap=to_distance,
        )
    else:
        line_plot("snr_db", "rate_bps_hz", "reference SNR (dB)", "achievable rate (bps/Hz)", "rate_vs_distance")

    # modeled overhead curves over a codebook-size axis, markers at actual values
    fig, ax = plt.subplots(figsize=(6, 4))
    n_c = table.metadata.get("num_codewords", max((r.overhead_slots for r in table.rows), default=128))
    k = table.metadata.get("num_aps", 1)
    sizes = np.linspace(max(4, n_c / 4), 2 * n_c, 64)
    for method in sorted(by_method):
        rows = by_method[method]
        b, l = rows[0].num_buckets, rows[0].num_rounds
        if method in ("exhaustive", "exhaustive_dft"):
            curve = sizes * k
        elif method == "eimb":
            curve = np.full_like(sizes, float(b * l * k))
        else:
            curve = np.full_like(sizes, float(b * l))
        ax.plot(sizes, curve, label=f"{method} (modeled)")
        ax.plot([n_c], [rows[0].overhead_slots], marker="s", linestyle="none")
    ax.set_xlabel("codebook size")
    ax.set_ylabel("training overhead (slots)")
    ax.grid(True, alpha=0.4)
    ax.legend()
    save(fig, "overhead_vs_codebook_size")
    return written


def emit(table: ResultTable, fmt: str, path) -> list:
    """Write the table as csv, json, or a directory of vector plots."""
    if not table.rows:
        raise ValueError("refusing to emit an empty result table")
    try:
        if fmt == "csv":
            with open(path, "w") as fh:
                fh.write(table.to_csv())
            return [path]
        if fmt == "json":
            payload = {
                "metadata": table.metadata,
                "rows": [dataclasses.asdict(r) for r in table.rows],
            }
            with open(path, "w") as fh:
                json.dump(payload, fh, indent=2, sort_keys=True)
                fh.write("\n")
            return [path]
        if fmt == "plot":
            return _render_plots(table, path)
    except OSError as exc:
        raise OSError(f"cannot write results to {path}: {exc}") from exc
    raise ValueError(f"unknown emit format {fmt!r}")

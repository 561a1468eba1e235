"""Hashing multi-arm beam training for near-field mmWave multi-AP networks."""

from .array_model import (
    ApPlacement,
    ArrayConfig,
    ChannelRealization,
    PathParams,
    element_position,
    exact_distance,
    los_channel,
    multipath_channel,
    received_signal,
    steering_vector,
    taylor_distance,
)
from .hash_family import (
    BucketPartition,
    PolynomialHash,
    collision_stats,
    partition,
    sample_hash,
)
from .harness import (
    ExperimentConfig,
    ResultRow,
    ResultTable,
    achievable_rate,
    emit,
    overhead,
    reference_snr,
    reference_snr_db,
    run_single,
    run_sweep,
)
from .multibeam import (
    MultiArmCodebook,
    MultiArmCodeword,
    build_multiarm_codebook,
    deviation,
    main_lobe,
    optimize_phases,
    pattern_multi,
    pattern_single,
    synthesize,
)
from .polar_codebook import (
    SamplingPoint,
    SingleBeamCodebook,
    angular_grid,
    build_codebook,
    dft_codebook,
    distance_rings,
    fresnel,
    load_codebook,
    projection,
    save_codebook,
    zeta_for_threshold,
)
from .protocol import (
    PowerMeasurements,
    ScanSchedule,
    TrainingResult,
    best_codeword,
    build_schedule,
    eimb_train,
    exhaustive_train,
    hmb_hard_train,
    hmb_train,
    required_rounds,
    scan,
    soft_demux,
    vote,
)

__version__ = "0.1.0"

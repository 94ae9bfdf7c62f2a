"""Cross-correlation time-of-arrival ranging via structured sparse recovery."""

from .baselines import (
    SparsityProfile,
    argmax_delay,
    dct_baseline,
    downsample_baseline,
    sparsity_profile,
    xcorr_fd,
    xcorr_range,
    xcorr_td,
)
from .detect import (
    DetectorConfig,
    PeakCandidate,
    RangeEstimate,
    alpha_feedback_loop,
    alpha_from_rho,
    detect_phase1,
    detect_phase2,
    detection_to_range,
    estimate_range,
    parabolic_refine,
    speed_of_sound,
)
from .dictionary import (
    CorrelationDictionary,
    build_correlation_dictionary,
    coherent_index_set,
    correlate_via_dictionary,
    mutual_coherence,
)
from .errors import (
    GeometryError,
    PacketFormatError,
    PacketProtocolError,
    ParameterError,
)
from .localize import AnchorSet, multilaterate, simulate_localization_round
from .pipeline import METHODS, PipelineResult, RangingPipeline
from .recovery import (
    SolverConfig,
    SparseCoefficients,
    recover_buffered,
    solve_l1,
    structured_prune,
)
from .sensing import (
    CostCounter,
    MeasurementPacket,
    SensingMatrix,
    choose_buffer_count,
    compress,
    compress_buffered,
    deserialize_packet,
    gen_sensing_matrix,
    measurement_bound,
    serialize_packet,
)
from .signals import (
    ChannelProfile,
    ChirpSpec,
    SampledSignal,
    gen_linear_chirp,
    measured_snr_db,
    min_acquisition_time,
    simulate_channel,
)

__version__ = "0.1.0"

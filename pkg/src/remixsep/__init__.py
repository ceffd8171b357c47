"""remixsep: multi-step inference for one-step audio source separation models.

A pretrained one-step separator is turned into a multi-step system by
iteratively blending the original mixture with the previous estimate,
searching K blend ratios with a quality metric, and keeping the argmax.
"""

from .audio import (
    AudioBuffer,
    ColaError,
    ShapeMismatchError,
    Spectrogram,
    UnsupportedWavError,
    WavError,
    WavFormatError,
    istft,
    load_wav,
    mix,
    save_wav,
    stft,
)
from .metrics import (
    CSDR_COMPONENT,
    MetricError,
    MetricKind,
    MetricScore,
    MissingReferenceError,
    NEG_MSE,
    SDR,
    SEARCH_SDR,
    SI_SNR,
    SilentReferenceError,
    USDR_COMPONENT,
    csdr,
    external,
    metric_eval,
    neg_mse,
    parse_metric,
    sdr,
    search_sdr,
    si_snr,
    usdr,
)
from .refine import (
    MixtureProblem,
    RefinementConfig,
    RefinementError,
    RefinementTrace,
    StepRecord,
    blend,
    ratio_grid,
    refine,
    select_candidate,
)
from .separators import (
    ContractionModelParams,
    ModelContractError,
    NoiseProfile,
    SeparationModel,
    contraction_model,
    estimate_noise_profile,
    external_model,
    identity_model,
    oracle_irm_model,
    spectral_gate_model,
)
from .theory import (
    BoundSimConfig,
    BridgeBatch,
    LipschitzEstimate,
    TheoryLabError,
    ddbm_loss_equivalence,
    estimate_lipschitz,
    monotonicity_audit,
    score_check,
    simulate_error_bound,
    smoothed_bridge_score,
)
from .wire import (
    ChildExitedError,
    ExternalProcessError,
    WireProtocolError,
    WireTimeoutError,
)

__version__ = "0.1.0"

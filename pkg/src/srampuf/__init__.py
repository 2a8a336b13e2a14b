"""SRAM PUF fingerprints, reliability/uniqueness metrics, a temperature noise
simulator and a sample-then-lock fuzzy extractor."""

from .errors import (
    AggregationError,
    CalibrationError,
    ComparisonError,
    FormatError,
    InfeasibleParametersError,
    ParameterError,
    PufError,
    ReproductionError,
)
from .fingerprint import (
    CellClasses,
    CellStatistics,
    Fingerprint,
    Reading,
    ReferenceFingerprint,
    aggregate_reference,
    cell_statistics,
    classify_cells,
    fhd,
    hamming_distance,
)
from .fuzzy import FEParams, HelperData, Locker, gen, helper_size, locker_count, rep, sampling_success_prob
from .metrics import (
    DistributionSummary,
    IntraSeries,
    UniquenessReport,
    distribution_summary,
    group_readings,
    inter_hd,
    intra_hd,
    relative_noise_change,
)
from .simulator import (
    PROFILES,
    CellModel,
    DeviceModel,
    NoiseTargets,
    calibrate,
    expected_fhd,
    sample_reading,
    synth_device,
)

__version__ = "0.1.0"

from .demo import DemonstratorProfile, DemoOutcome, generate_demo
from .features import FEATURE_NAMES, NormalizerStats, assemble_features, fit_normalizer, raw_inputs, trial_arrays
from .filters import (
    StreamingForceFilter,
    causal_gaussian_filter,
    causal_median_filter,
    downsample_force,
    filter_force_series,
    gaussian_weights,
)
from .split import split_dataset
from .trialio import read_manifest, read_trial, write_dataset, write_trial

"""EEG outcome prognosis from bipolar EEG segments.

Thin re-export of the compiled core. Arrays are numpy; configs and reports
are dicts.
"""

from ._core import (
    BIPOLAR_CHANNELS,
    SEGMENT_SAMPLES,
    Model,
    PrognosisError,
    accuracy,
    bandpass_filter,
    bandpass_magnitude,
    butterworth_bandpass,
    challenge_metric,
    cross_entropy_loss,
    gradcheck,
    load_recording,
    minmax_rescale,
    model_config,
    montage,
    mse_loss,
    preprocess,
    receptive_field,
    resample,
    roc_points,
    split_patients,
    synthesize_patient,
    total_loss,
    train_config,
    write_recording,
)

__all__ = [
    "BIPOLAR_CHANNELS",
    "SEGMENT_SAMPLES",
    "Model",
    "PrognosisError",
    "accuracy",
    "bandpass_filter",
    "bandpass_magnitude",
    "butterworth_bandpass",
    "challenge_metric",
    "cross_entropy_loss",
    "gradcheck",
    "load_recording",
    "minmax_rescale",
    "model_config",
    "montage",
    "mse_loss",
    "preprocess",
    "receptive_field",
    "resample",
    "roc_points",
    "split_patients",
    "synthesize_patient",
    "total_loss",
    "train_config",
    "write_recording",
]

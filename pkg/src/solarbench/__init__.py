"""Adversarial solarization benchmark for image classifiers."""

from solarbench.attack import (
    AttackConfig,
    AttackOutcome,
    RobustResult,
    evaluate_clean,
    evaluate_robust,
    rand_sol_attack,
)
from solarbench.classifier import (
    BrightnessClassifier,
    Classifier,
    ConstantClassifier,
    FunctionClassifier,
    OnnxClassifier,
    Prediction,
    PreprocessConfig,
    load_classifier,
    predict,
    preprocess,
    topk_contains,
)
from solarbench.dataset import Manifest, Sample, iter_samples, load_manifest
from solarbench.errors import (
    AttackError,
    ClassifierError,
    ConfigError,
    ImageDecodeError,
    ManifestError,
    SolarBenchError,
    UnsupportedImageFormat,
)
from solarbench.image import Image, decode_image, load_image, solarize
from solarbench.sweep import LossLandscape, SweepResult, loss_landscape, universal_sweep

__version__ = "0.1.0"

__all__ = [
    "AttackConfig",
    "AttackError",
    "AttackOutcome",
    "BrightnessClassifier",
    "Classifier",
    "ClassifierError",
    "ConfigError",
    "ConstantClassifier",
    "FunctionClassifier",
    "Image",
    "ImageDecodeError",
    "LossLandscape",
    "Manifest",
    "ManifestError",
    "OnnxClassifier",
    "Prediction",
    "PreprocessConfig",
    "RobustResult",
    "Sample",
    "SolarBenchError",
    "SweepResult",
    "UnsupportedImageFormat",
    "decode_image",
    "evaluate_clean",
    "evaluate_robust",
    "iter_samples",
    "load_classifier",
    "load_image",
    "load_manifest",
    "loss_landscape",
    "predict",
    "preprocess",
    "rand_sol_attack",
    "solarize",
    "topk_contains",
    "universal_sweep",
]

"""Universal fixed-threshold sweep and per-sample loss landscapes."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from solarbench._parallel import ordered_map
from solarbench.attack import top5_k
from solarbench.classifier import Classifier, topk_contains
from solarbench.dataset import Sample, resolve_image
from solarbench.errors import AttackError, ConfigError
from solarbench.image import solarize

SCORE_FLOOR = 1e-12
LOSS_TARGETS = ("label", "prediction")


@dataclass(frozen=True)
class SweepResult:
    alphas: tuple[float, ...]
    top1_accuracy: tuple[float, ...]
    top5_accuracy: tuple[float, ...]
    global_min_alpha: float
    global_min_accuracy: float

    def to_dict(self) -> dict:
        return {
            "alphas": list(self.alphas),
            "top1_accuracy": list(self.top1_accuracy),
            "top5_accuracy": list(self.top5_accuracy),
            "global_min_alpha": self.global_min_alpha,
            "global_min_accuracy": self.global_min_accuracy,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SweepResult":
        return cls(
            alphas=tuple(d["alphas"]),
            top1_accuracy=tuple(d["top1_accuracy"]),
            top5_accuracy=tuple(d["top5_accuracy"]),
            global_min_alpha=d["global_min_alpha"],
            global_min_accuracy=d["global_min_accuracy"],
        )


@dataclass(frozen=True)
class LossLandscape:
    sample_id: str
    alphas: tuple[float, ...]
    losses: tuple[float, ...]


def alpha_grid(step: float) -> np.ndarray:
    """Thresholds 0, step, 2*step, ... up to and including 1.

    When 1/step is (numerically) an integer m the grid is ``i / m``, so
    step 0.01 gives exactly 101 points. Otherwise 1.0 is appended after the
    last multiple of ``step``.
    """
    step = float(step)
    if not (math.isfinite(step) and 0.0 < step <= 1.0):
        raise ConfigError(f"step must be in (0, 1], got {step!r}")
    m = round(1.0 / step)
    if abs(m * step - 1.0) <= 1e-9:
        return np.arange(m + 1) / m
    count = math.floor(1.0 / step + 1e-9)
    grid = np.arange(count + 1) * step
    if grid[-1] < 1.0 - 1e-12:
        grid = np.append(grid, 1.0)
    else:
        grid[-1] = 1.0
    return grid


def landscape_grid(points: int) -> np.ndarray:
    if isinstance(points, bool) or not isinstance(points, (int, np.integer)) or points < 2:
        raise ConfigError(f"grid_points must be an integer >= 2, got {points!r}")
    return np.arange(points) / (points - 1)


def universal_sweep(
    classifier: Classifier,
    dataset: Iterable[Sample],
    step: float = 0.01,
    *,
    workers: int = 1,
) -> SweepResult:
    """Solarize every sample with the same threshold, for each threshold on the grid."""
    alphas = alpha_grid(step)
    k5 = top5_k(classifier.num_classes)

    def work(sample):
        sample_id, image, label = sample
        alpha = None
        try:
            image = resolve_image(image)
            hits = np.zeros((2, alphas.size), dtype=np.int64)
            for j, alpha in enumerate(alphas):
                pred = classifier.predict(solarize(image, float(alpha)))
                hits[0, j] = topk_contains(pred, label, 1)
                hits[1, j] = topk_contains(pred, label, k5)
            return hits
        except Exception as exc:
            raise AttackError(sample_id, None if alpha is None else float(alpha), exc) from exc

    total = 0
    hits = np.zeros((2, alphas.size), dtype=np.int64)
    for h in ordered_map(work, dataset, workers):
        hits += h
        total += 1
    if total == 0:
        raise ConfigError("cannot sweep an empty dataset")

    top1 = tuple(int(h) / total for h in hits[0])
    top5 = tuple(int(h) / total for h in hits[1])
    j = int(np.argmin(top1))
    return SweepResult(
        alphas=tuple(float(a) for a in alphas),
        top1_accuracy=top1,
        top5_accuracy=top5,
        global_min_alpha=float(alphas[j]),
        global_min_accuracy=top1[j],
    )


def loss_landscape(
    classifier: Classifier,
    sample: Sample,
    grid_points: int = 256,
    *,
    target: str = "label",
    floor: float = SCORE_FLOOR,
) -> LossLandscape:
    """Cross-entropy of one sample as a function of the threshold.

    ``target="prediction"`` measures the loss against the model's clean
    top-1 class instead of the ground-truth label.
    """
    if target not in LOSS_TARGETS:
        raise ConfigError(f"target must be one of {LOSS_TARGETS}, got {target!r}")
    alphas = landscape_grid(grid_points)
    sample_id, image, label = sample
    alpha = None
    try:
        image = resolve_image(image)
        if target == "prediction":
            label = int(classifier.predict(image).ranking[0])
        losses = []
        for alpha in alphas:
            pred = classifier.predict(solarize(image, float(alpha)))
            # + 0.0 turns -0.0 (from -log(1)) into 0.0
            losses.append(-math.log(max(float(pred.scores[label]), floor)) + 0.0)
    except Exception as exc:
        raise AttackError(sample_id, None if alpha is None else float(alpha), exc) from exc
    return LossLandscape(sample_id, tuple(float(a) for a in alphas), tuple(losses))

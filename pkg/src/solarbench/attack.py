"""RandSol-Top{k}-{n}: per-sample greedy random search over the solarization threshold."""

from __future__ import annotations

import hashlib
from dataclasses import asdict, dataclass, field
from typing import Iterable, Sequence

import numpy as np

from solarbench._parallel import ordered_map
from solarbench.classifier import Classifier, topk_contains
from solarbench.dataset import Sample, resolve_image
from solarbench.errors import AttackError, ConfigError
from solarbench.image import Image, solarize

ERROR_POLICIES = ("abort", "skip")


@dataclass(frozen=True)
class AttackConfig:
    k: int = 1
    n: int = 10
    seed: int = 0

    def __post_init__(self):
        for name in ("k", "n", "seed"):
            v = getattr(self, name)
            if isinstance(v, bool) or not isinstance(v, (int, np.integer)):
                raise ConfigError(f"{name} must be an integer, got {v!r}")
        if self.k < 1:
            raise ConfigError(f"k must be >= 1, got {self.k}")
        if self.n < 1:
            raise ConfigError(f"n must be >= 1, got {self.n}")
        if not 0 <= self.seed < 2**64:
            raise ConfigError(f"seed must be an unsigned 64-bit integer, got {self.seed}")

    @property
    def name(self) -> str:
        return f"RandSol-Top{self.k}-{self.n}"

    def check_against(self, classifier: Classifier):
        if self.k > classifier.num_classes:
            raise ConfigError(f"k={self.k} exceeds the classifier's {classifier.num_classes} classes")


@dataclass(frozen=True)
class AttackOutcome:
    sample_id: str
    success: bool
    chosen_alpha: float
    iterations_used: int
    true_label_score_at_chosen: float
    correct_top1: bool
    correct_top5: bool
    predicted_label: int

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "AttackOutcome":
        return cls(**d)


@dataclass
class RobustResult:
    top1: float
    top5: float
    outcomes: list[AttackOutcome]
    errors: list[tuple[str, str]] = field(default_factory=list)


def top5_k(num_classes: int) -> int:
    """The k used for "top-5" columns; classifiers with fewer classes use all of them."""
    return min(5, num_classes)


def sample_rng(seed: int, sample_id: str) -> np.random.Generator:
    """Independent, prefix-stable stream for one sample under a master seed."""
    digest = hashlib.sha256(f"{seed}\x1f{sample_id}".encode("utf-8")).digest()
    return np.random.Generator(np.random.PCG64(int.from_bytes(digest, "little")))


def draw_alphas(seed: int, sample_id: str, n: int) -> np.ndarray:
    return sample_rng(seed, sample_id).random(n)


def rand_sol_attack(
    classifier: Classifier,
    image: Image,
    label: int,
    config: AttackConfig,
    sample_id: str,
) -> AttackOutcome:
    """Draw up to ``config.n`` thresholds uniformly from [0, 1) and stop at the
    first one that pushes ``label`` out of the top-k.

    If none succeeds, the draw that minimized the true label's probability is
    reported (earliest draw on ties).
    """
    config.check_against(classifier)
    if not 0 <= label < classifier.num_classes:
        raise ConfigError(f"sample {sample_id!r}: label {label} out of range")

    best = None  # (score, alpha, prediction, iteration)
    alpha = None
    try:
        for i, alpha in enumerate(draw_alphas(config.seed, sample_id, config.n), start=1):
            alpha = float(alpha)
            pred = classifier.predict(solarize(image, alpha))
            score = float(pred.scores[label])
            if not topk_contains(pred, label, config.k):
                best = (score, alpha, pred, i)
                success = True
                break
            if best is None or score < best[0]:
                best = (score, alpha, pred, i)
        else:
            success = False
    except AttackError:
        raise
    except Exception as exc:
        raise AttackError(sample_id, alpha, exc) from exc

    score, alpha, pred, i = best
    return AttackOutcome(
        sample_id=sample_id,
        success=success,
        chosen_alpha=alpha,
        iterations_used=i if success else config.n,
        true_label_score_at_chosen=score,
        correct_top1=topk_contains(pred, label, 1),
        correct_top5=topk_contains(pred, label, top5_k(classifier.num_classes)),
        predicted_label=int(pred.ranking[0]),
    )


def _attack_sample(classifier, config, sample):
    sample_id, image, label = sample
    try:
        image = resolve_image(image)
    except Exception as exc:
        raise AttackError(sample_id, None, exc) from exc
    return rand_sol_attack(classifier, image, label, config, sample_id)


def _clean_sample(classifier, k_values, sample):
    sample_id, image, label = sample
    try:
        pred = classifier.predict(resolve_image(image))
        return [topk_contains(pred, label, k) for k in k_values]
    except Exception as exc:
        raise AttackError(sample_id, None, exc) from exc


def evaluate_clean(
    classifier: Classifier,
    dataset: Iterable[Sample],
    k_values: Sequence[int] = (1, 5),
    *,
    workers: int = 1,
    on_error: str = "abort",
    errors: list | None = None,
) -> dict[int, float]:
    """Top-k accuracy on the unmodified images, for every k in ``k_values``.

    With ``on_error="skip"`` failing samples are left out of the denominator
    and, if ``errors`` is given, appended to it as ``(sample_id, message)``.
    """
    if on_error not in ERROR_POLICIES:
        raise ConfigError(f"on_error must be one of {ERROR_POLICIES}, got {on_error!r}")
    for k in k_values:
        if not 1 <= k <= classifier.num_classes:
            raise ConfigError(f"k={k} is outside [1, {classifier.num_classes}]")

    def work(sample):
        try:
            return _clean_sample(classifier, k_values, sample)
        except AttackError as exc:
            if on_error == "abort":
                raise
            return exc

    hits = np.zeros(len(k_values), dtype=np.int64)
    total = 0
    failed = []
    for row in ordered_map(work, dataset, workers):
        if isinstance(row, AttackError):
            failed.append((row.sample_id, str(row)))
            continue
        hits += np.asarray(row, dtype=np.int64)
        total += 1
    if errors is not None:
        errors.extend(failed)
    if total == 0:
        if failed:
            raise AttackError(failed[0][0], None, f"every sample failed ({len(failed)} errors)")
        raise ConfigError("cannot evaluate an empty dataset")
    return {k: int(h) / total for k, h in zip(k_values, hits)}


def evaluate_robust(
    classifier: Classifier,
    dataset: Iterable[Sample],
    config: AttackConfig,
    *,
    workers: int = 1,
    on_error: str = "abort",
) -> RobustResult:
    """Attack every sample and report top-1/top-5 accuracy at the chosen thresholds.

    ``on_error="skip"`` records failing samples in ``errors`` and leaves them
    out of the denominator instead of aborting.
    """
    if on_error not in ERROR_POLICIES:
        raise ConfigError(f"on_error must be one of {ERROR_POLICIES}, got {on_error!r}")
    config.check_against(classifier)

    def work(sample):
        try:
            return _attack_sample(classifier, config, sample)
        except AttackError as exc:
            if on_error == "abort":
                raise
            return exc

    outcomes, errors = [], []
    for res in ordered_map(work, dataset, workers):
        if isinstance(res, AttackError):
            errors.append((res.sample_id, str(res)))
        else:
            outcomes.append(res)
    if not outcomes:
        if errors:
            raise AttackError(errors[0][0], None, f"every sample failed ({len(errors)} errors)")
        raise ConfigError("cannot evaluate an empty dataset")
    n = len(outcomes)
    return RobustResult(
        top1=sum(o.correct_top1 for o in outcomes) / n,
        top5=sum(o.correct_top5 for o in outcomes) / n,
        outcomes=outcomes,
        errors=errors,
    )

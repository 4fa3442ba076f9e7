"""Prediction interface over ONNX models and synthetic test classifiers."""

from __future__ import annotations

import hashlib
import json
import math
import threading
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Callable, Sequence

import numpy as np
from PIL import Image as PILImage

from solarbench.errors import ClassifierError, ConfigError
from solarbench.image import Image

LAYOUTS = ("channels-first", "channels-last")
SCORE_SUM_TOL = 1e-4


@dataclass(frozen=True, eq=False)
class Prediction:
    """Class probabilities plus their descending ranking.

    Ties in the ranking are broken by ascending class index.
    """

    scores: np.ndarray
    ranking: np.ndarray = field(init=False)

    def __post_init__(self):
        scores = np.array(self.scores, dtype=np.float64).reshape(-1)
        if scores.size < 2:
            raise ClassifierError(f"need at least 2 class scores, got {scores.size}")
        if not np.all(np.isfinite(scores)):
            raise ClassifierError("classifier produced non-finite scores")
        if scores.min() < 0.0:
            raise ClassifierError("classifier produced negative probabilities")
        total = float(scores.sum())
        if abs(total - 1.0) > SCORE_SUM_TOL:
            raise ClassifierError(f"class probabilities sum to {total}, not 1")
        scores.setflags(write=False)
        # stable sort on the negated scores keeps equal scores in index order
        ranking = np.argsort(-scores, kind="stable")
        ranking.setflags(write=False)
        object.__setattr__(self, "scores", scores)
        object.__setattr__(self, "ranking", ranking)

    @property
    def num_classes(self) -> int:
        return self.scores.size

    def top(self, k: int) -> list[int]:
        return [int(c) for c in self.ranking[:k]]


def softmax(logits: np.ndarray) -> np.ndarray:
    z = np.asarray(logits, dtype=np.float64)
    z = z - z.max()
    e = np.exp(z)
    return e / e.sum()


def looks_like_probabilities(out: np.ndarray) -> bool:
    return bool(out.min() >= 0.0 and out.max() <= 1.0 and abs(out.sum() - 1.0) <= SCORE_SUM_TOL)


def topk_contains(prediction: Prediction, label: int, k: int) -> bool:
    n = prediction.num_classes
    if not 1 <= k <= n:
        raise ValueError(f"k must be in [1, {n}], got {k}")
    if not 0 <= label < n:
        raise ValueError(f"label must be in [0, {n}), got {label}")
    return bool(np.any(prediction.ranking[:k] == label))


# --------------------------------------------------------------------------
# preprocessing


@dataclass(frozen=True)
class PreprocessConfig:
    resize_shorter_side: int = 256
    crop_size: int = 224
    mean: tuple[float, float, float] = (0.485, 0.456, 0.406)
    std: tuple[float, float, float] = (0.229, 0.224, 0.225)
    layout: str = "channels-first"

    def __post_init__(self):
        object.__setattr__(self, "mean", tuple(float(m) for m in self.mean))
        object.__setattr__(self, "std", tuple(float(s) for s in self.std))
        if not (isinstance(self.resize_shorter_side, int) and self.resize_shorter_side > 0):
            raise ConfigError(f"resize_shorter_side must be a positive integer, got {self.resize_shorter_side!r}")
        if not (isinstance(self.crop_size, int) and self.crop_size > 0):
            raise ConfigError(f"crop_size must be a positive integer, got {self.crop_size!r}")
        if self.crop_size > self.resize_shorter_side:
            raise ConfigError(
                f"crop_size ({self.crop_size}) exceeds resize_shorter_side ({self.resize_shorter_side})"
            )
        if len(self.mean) != 3 or len(self.std) != 3:
            raise ConfigError("mean and std need exactly 3 values each")
        if not all(math.isfinite(m) for m in self.mean):
            raise ConfigError("mean values must be finite")
        if not all(math.isfinite(s) and s > 0 for s in self.std):
            raise ConfigError("std values must be strictly positive")
        if self.layout not in LAYOUTS:
            raise ConfigError(f"layout must be one of {LAYOUTS}, got {self.layout!r}")

    @classmethod
    def from_dict(cls, d: dict) -> "PreprocessConfig":
        required = {"resize_shorter_side", "crop_size", "mean", "std", "layout"}
        missing = required - set(d)
        if missing:
            raise ConfigError(f"preprocess config is missing keys: {sorted(missing)}")
        unknown = set(d) - required
        if unknown:
            raise ConfigError(f"preprocess config has unknown keys: {sorted(unknown)}")
        return cls(
            resize_shorter_side=d["resize_shorter_side"],
            crop_size=d["crop_size"],
            mean=tuple(d["mean"]),
            std=tuple(d["std"]),
            layout=d["layout"],
        )

    @classmethod
    def from_json(cls, path) -> "PreprocessConfig":
        try:
            d = json.loads(Path(path).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"{path}: cannot read preprocess config: {exc}") from exc
        if not isinstance(d, dict):
            raise ConfigError(f"{path}: preprocess config must be a JSON object")
        return cls.from_dict(d)

    @classmethod
    def imagenet(cls) -> "PreprocessConfig":
        """The standard ImageNet evaluation pipeline, read from the bundled config."""
        text = resources.files("solarbench").joinpath("configs/imagenet.json").read_text("utf-8")
        return cls.from_dict(json.loads(text))

    def to_dict(self) -> dict:
        return {
            "resize_shorter_side": self.resize_shorter_side,
            "crop_size": self.crop_size,
            "mean": list(self.mean),
            "std": list(self.std),
            "layout": self.layout,
        }


def _resized_dims(height: int, width: int, shorter: int) -> tuple[int, int]:
    if height <= width:
        return shorter, int(shorter * width / height)
    return int(shorter * height / width), shorter


def preprocess(config: PreprocessConfig, image: Image) -> np.ndarray:
    """Resize, center-crop and normalize ``image`` into a 1-batch float32 tensor.

    The shorter side is scaled to ``resize_shorter_side`` (bilinear), the
    center ``crop_size`` square is kept, and each channel becomes
    ``(v - mean) / std``.
    """
    if image.channels != 3:
        raise ValueError(f"preprocessing needs a 3-channel image, got {image.channels}")
    h, w = image.height, image.width
    rh, rw = _resized_dims(h, w, config.resize_shorter_side)
    crop = config.crop_size
    if crop > rh or crop > rw:
        raise ValueError(f"crop {crop} is larger than the resized image {rh}x{rw}")

    if (rh, rw) == (h, w):
        resized = image.pixels.astype(np.float32)
    else:
        planes = []
        for c in range(3):
            plane = PILImage.fromarray(image.pixels[:, :, c].astype(np.float32), mode="F")
            plane = plane.resize((rw, rh), PILImage.BILINEAR)
            planes.append(np.asarray(plane, dtype=np.float32))
        resized = np.stack(planes, axis=2)

    top = int(round((rh - crop) / 2.0))
    left = int(round((rw - crop) / 2.0))
    out = resized[top : top + crop, left : left + crop, :].astype(np.float64)
    out = (out - np.asarray(config.mean)) / np.asarray(config.std)
    out = out.astype(np.float32)
    if config.layout == "channels-first":
        out = out.transpose(2, 0, 1)
    return np.ascontiguousarray(out[None, ...])


# --------------------------------------------------------------------------
# classifiers


class Classifier:
    """Base class: subclasses implement :meth:`raw_scores`.

    :meth:`predict` turns the raw output into a :class:`Prediction`. Whether
    a softmax is needed is decided once, from the first output seen, and
    cached for the lifetime of the instance.
    """

    backend = "abstract"

    def __init__(self, name: str, num_classes: int):
        if num_classes < 2:
            raise ConfigError(f"a classifier needs at least 2 classes, got {num_classes}")
        self.name = name
        self.num_classes = int(num_classes)
        self._needs_softmax = None
        self._lock = threading.Lock()

    def raw_scores(self, image: Image) -> np.ndarray:
        raise NotImplementedError

    def predict(self, image: Image) -> Prediction:
        out = np.asarray(self.raw_scores(image), dtype=np.float64).reshape(-1)
        if out.size != self.num_classes:
            raise ClassifierError(
                f"{self.name}: expected {self.num_classes} scores, got {out.size}"
            )
        if not np.all(np.isfinite(out)):
            raise ClassifierError(f"{self.name}: model output contains non-finite values")
        if self._needs_softmax is None:
            with self._lock:
                if self._needs_softmax is None:
                    self._needs_softmax = not looks_like_probabilities(out)
        return Prediction(softmax(out) if self._needs_softmax else out)

    @property
    def digest(self) -> str:
        return hashlib.sha256(self.name.encode("utf-8")).hexdigest()

    @property
    def preprocess_config(self) -> PreprocessConfig | None:
        return None

    def describe(self) -> dict:
        return {
            "backend": self.backend,
            "identity": self.name,
            "digest": self.digest,
            "num_classes": self.num_classes,
        }


def predict(classifier: Classifier, image: Image) -> Prediction:
    return classifier.predict(image)


class OnnxClassifier(Classifier):
    """A serialized ONNX model with a single image input and a single score output."""

    backend = "serialized-model"

    def __init__(self, path, config: PreprocessConfig | None = None, *, threads: int | None = None):
        import onnxruntime as ort

        self.path = Path(path)
        self.config = config or PreprocessConfig.imagenet()
        try:
            model_bytes = self.path.read_bytes()
        except OSError as exc:
            raise ClassifierError(f"{path}: cannot read model file: {exc}") from exc
        self._digest = hashlib.sha256(model_bytes).hexdigest()
        opts = ort.SessionOptions()
        if threads:
            opts.intra_op_num_threads = threads
        try:
            self.session = ort.InferenceSession(
                model_bytes, sess_options=opts, providers=["CPUExecutionProvider"]
            )
        except Exception as exc:  # onnxruntime raises its own exception types
            raise ClassifierError(f"{path}: cannot load model: {exc}") from exc

        inputs = self.session.get_inputs()
        outputs = self.session.get_outputs()
        if len(inputs) != 1 or len(outputs) != 1:
            raise ClassifierError(
                f"{path}: expected one input and one output, got {len(inputs)} and {len(outputs)}"
            )
        self.input_name = inputs[0].name
        self.input_shape = list(inputs[0].shape)
        self.output_name = outputs[0].name
        num_classes = outputs[0].shape[-1] if outputs[0].shape else None
        if not isinstance(num_classes, int):
            probe = self._run(np.zeros(self._expected_shape(), dtype=np.float32))
            num_classes = probe.size
        super().__init__(str(path), num_classes)

    def _expected_shape(self) -> tuple[int, ...]:
        c = self.config.crop_size
        if self.config.layout == "channels-first":
            return (1, 3, c, c)
        return (1, c, c, 3)

    def _run(self, tensor: np.ndarray) -> np.ndarray:
        try:
            (out,) = self.session.run([self.output_name], {self.input_name: tensor})
        except Exception as exc:
            raise ClassifierError(f"{self.path}: inference failed: {exc}") from exc
        return np.asarray(out).reshape(-1)

    def raw_scores(self, image: Image) -> np.ndarray:
        tensor = preprocess(self.config, image.to_rgb())
        if len(self.input_shape) != tensor.ndim or any(
            isinstance(want, int) and want != got for want, got in zip(self.input_shape, tensor.shape)
        ):
            raise ClassifierError(
                f"{self.path}: input-shape mismatch: model expects {self.input_shape}, "
                f"preprocessing produced {list(tensor.shape)}"
            )
        return self._run(tensor)

    @property
    def digest(self) -> str:
        return self._digest

    @property
    def preprocess_config(self) -> PreprocessConfig:
        return self.config


class FunctionClassifier(Classifier):
    """Wraps a pure function ``image -> scores``."""

    backend = "synthetic"

    def __init__(self, fn: Callable[[Image], Sequence[float]], num_classes: int, name: str = "function"):
        super().__init__(name, num_classes)
        self.fn = fn

    def raw_scores(self, image):
        return self.fn(image)


class ConstantClassifier(Classifier):
    """Ignores its input and always returns the same probabilities."""

    backend = "synthetic"

    def __init__(self, scores: Sequence[float], name: str | None = None):
        scores = np.array(scores, dtype=np.float64)
        scores.setflags(write=False)
        label = ",".join(repr(float(s)) for s in scores)
        super().__init__(name or f"synthetic:constant:{label}", scores.size)
        self.scores = scores

    @classmethod
    def one_hot(cls, label: int, num_classes: int) -> "ConstantClassifier":
        s = np.zeros(num_classes)
        s[label] = 1.0
        return cls(s)

    def raw_scores(self, image):
        return self.scores


class BrightnessClassifier(Classifier):
    """Two-class mock: class 1 ("bright") iff the mean pixel exceeds ``threshold``.

    With ``sharpness=None`` the output is one-hot. Otherwise the bright-class
    probability is ``sigmoid(sharpness * (mean - threshold))``; at the
    threshold itself both classes score 0.5 and the tie resolves to class 0.
    """

    backend = "synthetic"

    def __init__(self, threshold: float = 0.5, sharpness: float | None = None):
        name = "synthetic:brightness"
        if sharpness is not None:
            name += f":{sharpness!r}"
        if threshold != 0.5:
            name += f"@{threshold!r}"
        super().__init__(name, 2)
        self.threshold = threshold
        self.sharpness = sharpness

    def raw_scores(self, image):
        mean = float(np.mean(image.pixels))
        if self.sharpness is None:
            p = 1.0 if mean > self.threshold else 0.0
        else:
            p = 1.0 / (1.0 + math.exp(-self.sharpness * (mean - self.threshold)))
        return np.array([1.0 - p, p])


def load_classifier(model: str, config: PreprocessConfig | None = None) -> Classifier:
    """Build a classifier from a CLI-style model string.

    Accepted forms: a path to an ``.onnx`` file, ``synthetic:brightness``,
    ``synthetic:brightness:<sharpness>`` and
    ``synthetic:constant:<p0>,<p1>,...``.
    """
    if model.startswith("synthetic:"):
        parts = model.split(":")
        kind = parts[1] if len(parts) > 1 else ""
        try:
            if kind == "brightness" and len(parts) == 2:
                return BrightnessClassifier()
            if kind == "brightness" and len(parts) == 3:
                return BrightnessClassifier(sharpness=float(parts[2]))
            if kind == "constant" and len(parts) == 3:
                return ConstantClassifier([float(v) for v in parts[2].split(",")])
        except ValueError as exc:
            raise ConfigError(f"bad synthetic model spec {model!r}: {exc}") from exc
        raise ConfigError(f"unknown synthetic model {model!r}")
    return OnnxClassifier(model, config)

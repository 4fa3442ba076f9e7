"""Exception hierarchy.

The CLI maps :class:`ConfigError` (and its subclasses) to exit code 2 and
every other :class:`SolarBenchError` to exit code 3.
"""


class SolarBenchError(Exception):
    pass


class ConfigError(SolarBenchError, ValueError):
    """Invalid user-supplied configuration (flags, config files, manifests)."""


class ManifestError(ConfigError):
    pass


class ImageDecodeError(SolarBenchError):
    def __init__(self, message, path=None):
        self.path = path
        if path is not None:
            message = f"{path}: {message}"
        super().__init__(message)


class UnsupportedImageFormat(ImageDecodeError):
    pass


class ClassifierError(SolarBenchError):
    pass


class AttackError(SolarBenchError):
    """A per-sample failure, tagged with the sample and the threshold in use."""

    def __init__(self, sample_id, alpha, cause):
        self.sample_id = sample_id
        self.alpha = alpha
        self.cause = cause
        where = f"sample {sample_id!r}"
        if alpha is not None:
            where += f" at alpha={alpha!r}"
        super().__init__(f"{where}: {cause}")

"""Exception types shared across the toolkit."""


class HardlabError(Exception):
    """Base class for all toolkit-specific failures."""


class FormatError(HardlabError):
    """File does not look like the expected binary format."""


class CorruptionError(HardlabError):
    """Header and payload disagree about sizes or layout."""


class ValidationError(HardlabError):
    """Decoded values violate a contract (NaN, negative loss, ...)."""


class MissingChannelError(HardlabError):
    """An estimator needs a channel the log does not carry."""


class IncompatibilityError(HardlabError):
    """Two inputs that must agree (length, estimator kind, dataset) do not."""


class DegenerateClassError(HardlabError):
    """A class is empty or too small for the requested computation."""


class DegenerateInputError(HardlabError):
    """Input carries no usable signal (constant values, zero mass, ...)."""


class OverScalingError(HardlabError):
    """Ratio scaling pushed a class ratio to zero or below."""

    def __init__(self, class_id, max_alpha):
        self.class_id = int(class_id)
        self.max_alpha = float(max_alpha)
        super().__init__(
            f"scaling makes the ratio of class {self.class_id} nonpositive; "
            f"largest safe alpha is {self.max_alpha:.6g}"
        )


class TrainingDivergedError(HardlabError):
    """Reference training produced a non-finite loss."""

    def __init__(self, epoch):
        self.epoch = int(epoch)
        super().__init__(f"training loss became non-finite at epoch {self.epoch}")


class NoElbowError(HardlabError):
    """Cumulative curve is too close to linear to carry an elbow."""

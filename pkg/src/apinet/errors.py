"""Exception types shared across the package."""


class DimensionError(ValueError):
    """Operand shapes are incompatible."""


class ContractError(RuntimeError):
    """A call violated an operation's precondition."""


class ConfigError(ValueError):
    """Invalid configuration value or combination."""


class GradCheckError(RuntimeError):
    """The checked function produced a non-finite value."""

    def __init__(self, message, name=None, index=None):
        super().__init__(message)
        self.name = name
        self.index = index


class FormatError(ValueError):
    """Malformed binary file; ``offset`` is the byte position of the problem."""

    def __init__(self, message, offset):
        super().__init__(f"{message} (at byte offset {offset})")
        self.offset = offset


class TrainingError(RuntimeError):
    def __init__(self, message, epoch, episode):
        super().__init__(f"{message} (epoch {epoch}, episode {episode})")
        self.epoch = epoch
        self.episode = episode

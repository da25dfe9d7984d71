"""Exception hierarchy shared across the package."""

from typing import Any


class SqlabError(Exception):
    """Base class for every error raised by sqlab."""


class DimensionError(SqlabError, ValueError):
    """Operand shapes or declared dimensions disagree."""


class DomainError(SqlabError, ArithmeticError):
    """A function was evaluated outside its domain."""

    def __init__(self, op: str, index: tuple[int, ...], value: float) -> None:
        self.op = op
        self.index = index
        self.value = value
        super().__init__(f"{op}: input {value!r} at index {index} is outside the domain")


class DegenerateProjectionError(SqlabError, ArithmeticError):
    """A projected codebook row has (numerically) zero norm."""

    def __init__(self, row: int, norm: float) -> None:
        self.row = row
        self.norm = norm
        super().__init__(f"Projected code row {row} has norm {norm:.3e}; cannot normalize")


class InvalidMarginalError(SqlabError, ValueError):
    """Transport marginals are not probability vectors."""


class TransportSolveError(SqlabError, ArithmeticError):
    """The exact transport linear program did not reach an optimum."""


class EtaTooSmallError(SqlabError, ArithmeticError):
    """The Gibbs kernel underflowed for the requested entropic weight."""

    def __init__(self, eta: float, row: int) -> None:
        self.eta = eta
        self.row = row
        super().__init__(
            f"Gibbs kernel row {row} underflowed to zero at eta={eta:g}; "
            "use the log-domain solver or a larger eta"
        )


class ConfigError(SqlabError, ValueError):
    """Experiment configuration is invalid or inconsistent."""


class NumericAbortError(SqlabError, ArithmeticError):
    """A loss became non-finite during optimization."""

    def __init__(
        self,
        step: int,
        terms: dict[str, float],
        grad_norms: dict[str, float] | None = None,
        phase: str = "train",
    ) -> None:
        self.step = step
        self.terms = terms
        self.grad_norms = grad_norms or {}
        self.phase = phase
        breakdown = ", ".join(f"{k}={v:.6g}" for k, v in terms.items())
        super().__init__(f"Non-finite loss in {phase} at step {step}: {breakdown}")

    def diagnostics(self) -> dict[str, Any]:
        """Return a JSON-serializable dump of the failure."""
        return {
            "phase": self.phase,
            "step": self.step,
            "terms": self.terms,
            "grad_norms": self.grad_norms,
        }


class CheckpointError(SqlabError, ValueError):
    """Base class for checkpoint read failures."""


class CheckpointFormatError(CheckpointError):
    """File is not a checkpoint (bad magic or malformed block)."""


class CheckpointVersionError(CheckpointError):
    """Checkpoint was written by an unsupported format version."""


class TruncatedCheckpointError(CheckpointError):
    """Checkpoint is shorter than its header declares."""


class ChecksumError(CheckpointError):
    """Stored CRC32 does not match the file contents."""

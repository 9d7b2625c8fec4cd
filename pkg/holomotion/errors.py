"""Exception hierarchy. Each category fixes the CLI exit code of its subclasses."""

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_VALIDATION = 2
EXIT_OBSTRUCTION = 3
EXIT_SOLVER = 4


class HolomotionError(Exception):
    """Base class for all library errors."""

    exit_code: int = EXIT_USAGE

    @property
    def cause(self) -> str:
        return type(self).__name__


class UsageError(HolomotionError):
    """Bad command-line usage or run configuration."""

    exit_code = EXIT_USAGE


class InputError(HolomotionError):
    """Malformed input text (expressions, motion definition files)."""

    exit_code = EXIT_USAGE


class AxiomViolation(HolomotionError):
    """Input violates a motion axiom or a geometric validity condition."""

    exit_code = EXIT_VALIDATION


class ObstructionError(HolomotionError):
    """A mathematical obstruction, such as nontrivial monodromy."""

    exit_code = EXIT_OBSTRUCTION


class SolverFailure(HolomotionError):
    """A numerical procedure gave up. Never a statement about the mathematics."""

    exit_code = EXIT_SOLVER

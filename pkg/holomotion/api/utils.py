import contextlib
import json
from pathlib import Path
from typing import Callable, Dict, Iterator, List, Optional, Sequence

from pydantic import BaseModel, ConfigDict, Field, ValidationError

from holomotion.config import Tolerances, settings
from holomotion.errors import EXIT_USAGE, HolomotionError, UsageError
from holomotion.logger import logger
from holomotion.models.domain import ExtendMode, Subcommand
from holomotion.models.reports import ArtifactEntry, Report
from holomotion.services.braid import NontrivialMonodromy
from holomotion.services.expressions import ExpressionSyntaxError, parse_constant
from holomotion.services.extend import StageFailure
from holomotion.services.motion_file import MotionFileError
from holomotion.services.validation import ValidationFailure


class RunConfig(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    input: Path = Field(..., description="Motion definition file")
    subcommand: Subcommand
    out: Path = Field(..., description="Output directory for the report and artifacts")
    seed: int
    samples: Optional[int] = Field(None, description="Validation sample budget")
    tolerances: Tolerances
    mode: Optional[ExtendMode] = None
    points: List[complex] = []
    target: Optional[complex] = None


# --- Run configuration ---


def parse_tolerance_overrides(pairs: Sequence[str]) -> Dict[str, float]:
    """
    Parses repeated KEY=VAL options into tolerance overrides.
    Raises UsageError for unknown keys or values that are not positive numbers.
    """
    known = set(Tolerances.model_fields)
    overrides: Dict[str, float] = {}
    for pair in pairs:
        key, sep, value = pair.partition("=")
        key = key.strip()
        if not sep:
            raise UsageError(f"Tolerance override {pair!r} is not of the form KEY=VAL")
        if key not in known:
            raise UsageError(f"Unknown tolerance {key!r}; known: {', '.join(sorted(known))}")
        try:
            number = float(value)
        except ValueError:
            raise UsageError(f"Tolerance {key} must be a number, got {value!r}")
        if not number > 0:
            raise UsageError(f"Tolerance {key} must be positive, got {value!r}")
        overrides[key] = number
    return overrides


def parse_point(text: str, option: str) -> complex:
    """Parses a constant expression given on the command line."""
    try:
        return parse_constant(text)
    except ExpressionSyntaxError as e:
        raise UsageError(f"{option} {text!r}: {e.message} at column {e.position + 1}")


def build_run_config(
    subcommand: Subcommand,
    input: str,
    out: Optional[str],
    seed: Optional[int],
    samples: Optional[int],
    tolerance: Sequence[str] = (),
    mode: Optional[str] = None,
    points: Sequence[str] = (),
    target: Optional[str] = None,
) -> RunConfig:
    """
    Validates command-line values into a RunConfig.
    Raises UsageError for unknown modes, bad tolerance overrides and unparsable points.
    """
    if mode is not None and mode not in {m.value for m in ExtendMode}:
        raise UsageError(f"Unknown mode {mode!r}; use one of {', '.join(m.value for m in ExtendMode)}")
    overrides = parse_tolerance_overrides(tolerance)
    try:
        return RunConfig(
            input=Path(input),
            subcommand=subcommand,
            out=Path(out or settings.OUTPUT_DIR),
            seed=settings.RANDOM_SEED if seed is None else seed,
            samples=samples,
            tolerances=Tolerances(**{**settings.TOLERANCES.model_dump(), **overrides}),
            mode=mode,
            points=[parse_point(p, "--point") for p in points],
            target=parse_point(target, "--target") if target is not None else None,
        )
    except ValidationError as e:
        raise UsageError(f"Invalid run configuration: {e.errors()[0]['msg']}")


@contextlib.contextmanager
def applied(config: RunConfig) -> Iterator[None]:
    """Puts the run's seed, sample budget and tolerances into settings for the duration of the run."""
    saved = (settings.RANDOM_SEED, settings.VALIDATION_SAMPLES, settings.TOLERANCES)
    settings.RANDOM_SEED = config.seed
    if config.samples is not None:
        settings.VALIDATION_SAMPLES = config.samples
    settings.TOLERANCES = config.tolerances
    try:
        yield
    finally:
        settings.RANDOM_SEED, settings.VALIDATION_SAMPLES, settings.TOLERANCES = saved


# --- Output ---


def new_report(config: RunConfig) -> Report:
    return Report(
        version=settings.REPORT_VERSION,
        subcommand=config.subcommand,
        input=str(config.input),
        seed=config.seed,
        tolerances=config.tolerances,
    )


def write_artifact(config: RunConfig, report: Report, kind: str, name: str, content: str) -> Path:
    """Writes one artifact next to the report and records it."""
    config.out.mkdir(parents=True, exist_ok=True)
    path = config.out / name
    path.write_text(content, encoding="utf-8")
    report.artifacts.append(ArtifactEntry(kind=kind, path=name))
    logger.debug(f"Wrote {kind} artifact {path}")
    return path


def write_report(config: RunConfig, report: Report) -> Path:
    """Writes <out>/<subcommand>.json with sorted keys and no timestamps."""
    config.out.mkdir(parents=True, exist_ok=True)
    path = config.out / f"{config.subcommand.value}.json"
    payload = json.dumps(report.model_dump(mode="json"), sort_keys=True, indent=2)
    path.write_text(payload + "\n", encoding="utf-8")
    logger.info(f"Report written to {path} (exit {report.exit_code})")
    return path


# --- Error mapping ---


def describe_error(error: HolomotionError) -> dict:
    """Machine-readable witnesses for the errors that carry them."""
    if isinstance(error, MotionFileError):
        return {"line": error.line, "column": error.column}
    if isinstance(error, ValidationFailure):
        return {"axiom": error.axiom, "witness": [error.witness.real, error.witness.imag]}
    if isinstance(error, NontrivialMonodromy):
        return {"generator": error.generator, "word": error.mapping_class.word.to_tokens()}
    if isinstance(error, StageFailure):
        point = complex(error.point)
        return {
            "stage": error.stage,
            "point": [point.real, point.imag],
            "reason": error.reason.cause,
            **describe_error(error.reason),
        }
    return {}


def execute(subcommand: Subcommand, options: dict, body: Callable[[RunConfig, Report], None]) -> int:
    """
    Runs one subcommand body and always writes its report.
    Returns the exit code: the body's own, the error category's, or 1 for unexpected errors.
    """
    try:
        config = build_run_config(subcommand, **options)
    except HolomotionError as e:
        logger.error(f"{subcommand.value}: {e}")
        return e.exit_code

    report = new_report(config)
    with applied(config):
        try:
            body(config, report)
        except HolomotionError as e:
            logger.error(f"{subcommand.value} failed with {e.cause}: {e}")
            report.exit_code = e.exit_code
            report.cause = e.cause
            report.message = str(e)
            report.details.setdefault("error", {}).update(describe_error(e))
        except Exception as e:
            logger.error(f"Unexpected error during {subcommand.value}: {e}", exc_info=True)
            report.exit_code = EXIT_USAGE
            report.cause = type(e).__name__
            report.message = str(e)
        write_report(config, report)
    return report.exit_code

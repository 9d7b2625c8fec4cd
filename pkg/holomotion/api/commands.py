import json
import sys
from typing import List, Tuple

import click
import numpy as np

from holomotion.api.utils import RunConfig, execute, write_artifact
from holomotion.config import settings
from holomotion.errors import EXIT_OBSTRUCTION, EXIT_OK, EXIT_USAGE, UsageError
from holomotion.logger import logger
from holomotion.models.domain import ExtendMode, Subcommand, Verdict
from holomotion.models.reports import Report, VerdictEntry, WordEntry
from holomotion.services.braid import NontrivialMonodromy, first_nontrivial, generator_braids, is_trivial_monodromy
from holomotion.services.cover import lift_map, lift_path, universal_motion_eval
from holomotion.services.extend import check_forgetful_compatibility, extend_motion_inductive
from holomotion.services.flow import build_continuous_motion, grid_spec
from holomotion.services.motion import MotionFamily
from holomotion.services.motion_file import load_motion_file
from holomotion.services.render import beltrami_svg, braid_svg, motion_toml
from holomotion.services.sphere import chordal_distance
from holomotion.services.strand_solver import solve_with_schedule
from holomotion.services.validation import ValidationReport, sample_motion, validate_motion


class HolomotionCLI(click.Group):
    """Click group whose usage errors exit with status 1 and whose commands return their exit status."""

    def main(self, *args, **kwargs):
        kwargs["standalone_mode"] = False
        try:
            code = super().main(*args, **kwargs)
        except click.ClickException as e:
            e.show()
            sys.exit(EXIT_USAGE)
        except click.Abort:
            click.echo("Aborted!", err=True)
            sys.exit(EXIT_USAGE)
        sys.exit(code or EXIT_OK)


def common_options(command):
    command = click.option(
        "--tolerance",
        "tolerance",
        multiple=True,
        metavar="KEY=VAL",
        help="Override one entry of the tolerance table (repeatable).",
    )(command)
    command = click.option("--samples", type=int, default=None, help="Validation sample budget.")(command)
    command = click.option("--seed", type=int, default=None, help="Random seed (default from settings).")(command)
    command = click.option("--out", default=None, help="Output directory (default from settings).")(command)
    command = click.option("--input", "input", required=True, help="Motion definition file (TOML).")(command)
    return command


# --- Shared steps ---


def _point(z: complex) -> List[float]:
    return [z.real, z.imag]


def _load_and_validate(config: RunConfig, report: Report) -> Tuple[MotionFamily, ValidationReport]:
    family = load_motion_file(config.input)
    report.details["family"] = family.describe()
    validation = validate_motion(family, config.samples)
    report.details["validation"] = {
        "basepoint_residual": validation.basepoint_residual,
        "injectivity_margin": validation.injectivity_margin,
        "margin_witness": _point(validation.margin_witness),
        "holomorphy_residuals": list(validation.holomorphy_residuals),
        "sample_count": validation.sample_count,
        "loop_sample_count": validation.loop_sample_count,
        "sampler": validation.sampler,
        "exact_scan": validation.exact_scan,
        "single_valued": list(validation.single_valued),
    }
    report.verdicts.append(VerdictEntry(check="axioms", verdict=Verdict.PASS))
    return family, validation


def _monodromy_step(config: RunConfig, report: Report, family: MotionFamily, diagrams: bool = True) -> bool:
    """Records words and verdicts per generator; returns True when the monodromy is trivial."""
    braids = generator_braids(family)
    for g, (tracks, cls) in enumerate(braids):
        trivial = cls.is_trivial()
        report.words.append(
            WordEntry(generator=g, word=cls.word.to_tokens(), exponent_sum=cls.word.exponent_sum, trivial=trivial)
        )
        report.verdicts.append(
            VerdictEntry(check=f"generator-{g}", verdict=Verdict.TRIVIAL if trivial else Verdict.NONTRIVIAL)
        )
        if diagrams:
            svg = braid_svg(tracks, cls.word, f"generator {g}")
            write_artifact(config, report, "braid-svg", f"braid-{g}.svg", svg)
    classes = [cls for _, cls in braids]
    overall = is_trivial_monodromy(family, classes)
    report.verdicts.append(VerdictEntry(check="monodromy", verdict=Verdict.TRIVIAL if overall else Verdict.NONTRIVIAL))
    if not overall:
        offending = first_nontrivial(classes)
        error = NontrivialMonodromy(offending, classes[offending])
        report.exit_code = EXIT_OBSTRUCTION
        report.cause = error.cause
        report.message = str(error)
    return overall


# --- Subcommand bodies ---


def cmd_validate(config: RunConfig, report: Report) -> None:
    _load_and_validate(config, report)


def cmd_monodromy(config: RunConfig, report: Report) -> None:
    family, _ = _load_and_validate(config, report)
    _monodromy_step(config, report, family)


def _extend_continuous(config: RunConfig, report: Report, family: MotionFamily) -> None:
    grid = build_continuous_motion(family, grid_spec())
    grid_json = json.dumps(grid.describe(include_images=True), sort_keys=True, indent=2) + "\n"
    write_artifact(config, report, "grid-json", "grid.json", grid_json)
    worst = int(np.argmax([sample.beltrami_sup for sample in grid.samples]))
    write_artifact(config, report, "beltrami-svg", "beltrami.svg", beltrami_svg(grid, worst))
    report.details["grid"] = grid.describe(include_images=False)
    report.verdicts.append(VerdictEntry(check="continuous-motion", verdict=Verdict.SOLVED))
    failures = grid.cross_edge_failures
    report.verdicts.append(VerdictEntry(check="cross-edge", verdict=Verdict.FAIL if failures else Verdict.PASS))
    if failures:
        report.exit_code = failures[0].exit_code
        report.cause = failures[0].cause
        report.message = str(failures[0])


def _extend_point(config: RunConfig, report: Report, family: MotionFamily) -> None:
    if len(config.points) != 1:
        raise UsageError(f"Mode 'point' takes exactly one --point, got {len(config.points)}")
    solution = solve_with_schedule(family, config.points[0])
    checks = check_forgetful_compatibility(solution.family, family)
    write_artifact(config, report, "motion-toml", "extended.toml", motion_toml(solution.family))
    report.details["strand"] = {
        "point": _point(config.points[0]),
        "degree": solution.degree,
        "margin": solution.margin,
        "coefficients": [_point(c) for c in solution.coefficients],
        "text": solution.strand.text(),
        "holomorphy_residual": max(solution.report.holomorphy_residuals, default=0.0),
        "forgetful_checks": checks,
    }
    report.verdicts.append(VerdictEntry(check="new-strand", verdict=Verdict.SOLVED))


def _extend_inductive(config: RunConfig, report: Report, family: MotionFamily) -> None:
    if not config.points:
        raise UsageError("Mode 'inductive' needs at least one --point")
    result = extend_motion_inductive(family, config.points)
    write_artifact(config, report, "motion-toml", "extended.toml", motion_toml(result.family))
    report.details.update(result.describe())
    report.verdicts.append(VerdictEntry(check="inductive-extension", verdict=Verdict.SOLVED))


EXTEND_MODES = {
    ExtendMode.CONTINUOUS: _extend_continuous,
    ExtendMode.POINT: _extend_point,
    ExtendMode.INDUCTIVE: _extend_inductive,
}


def cmd_extend(config: RunConfig, report: Report) -> None:
    if config.mode is None:
        raise UsageError(f"extend needs --mode ({', '.join(m.value for m in ExtendMode)})")
    family, _ = _load_and_validate(config, report)
    report.details["mode"] = config.mode.value
    logger.info(f"Extending {config.input} in mode {config.mode.value}")
    EXTEND_MODES[config.mode](config, report, family)


def _lift_step(report: Report, family: MotionFamily) -> None:
    lifted = lift_map(family)
    report.details["lift_map"] = lifted.describe()
    report.verdicts.append(VerdictEntry(check="lift", verdict=Verdict.LIFTED))


def cmd_lift(config: RunConfig, report: Report) -> None:
    if config.target is None:
        raise UsageError("lift needs --target")
    family, _ = _load_and_validate(config, report)
    point = lift_path(family, family.domain.path_to(config.target))
    expected = sample_motion(family, [config.target])[0]
    residual = max(
        (chordal_distance(universal_motion_eval(point, k), expected[k]) for k in range(point.size)),
        default=0.0,
    )
    report.details["cover_point"] = {**point.describe(), "target": _point(config.target), "endpoint_residual": residual}
    try:
        _lift_step(report, family)
    except NontrivialMonodromy as e:
        report.verdicts.append(VerdictEntry(check="lift", verdict=Verdict.OBSTRUCTED))
        report.exit_code = e.exit_code
        report.cause = e.cause
        report.message = str(e)


def cmd_report(config: RunConfig, report: Report) -> None:
    family, _ = _load_and_validate(config, report)
    if _monodromy_step(config, report, family, diagrams=False):
        _lift_step(report, family)
    else:
        report.verdicts.append(VerdictEntry(check="lift", verdict=Verdict.OBSTRUCTED))


# --- Commands ---


@click.group(cls=HolomotionCLI, help="Holomorphic motions of finite point sets.")
@click.version_option(settings.APP_VERSION, prog_name=settings.PROJECT_NAME)
def cli():
    pass


@cli.command(help="Check the motion axioms and write validate.json.")
@common_options
def validate(**options):
    return execute(Subcommand.VALIDATE, options, cmd_validate)


@cli.command(help="Braid word and mapping class per generator loop; exit 3 when nontrivial.")
@common_options
def monodromy(**options):
    return execute(Subcommand.MONODROMY, options, cmd_monodromy)


@cli.command(help="Extend the motion: continuous grid, one new point, or inductively.")
@common_options
@click.option("--mode", default=None, help="continuous | point | inductive")
@click.option("--point", "points", multiple=True, help="New base point (repeatable).")
def extend(**options):
    return execute(Subcommand.EXTEND, options, cmd_extend)


@cli.command(help="Lift the motion to the covering model along the canonical path to --target.")
@common_options
@click.option("--target", default=None, help="Parameter to lift to.")
def lift(**options):
    return execute(Subcommand.LIFT, options, cmd_lift)


@cli.command(help="Validation, monodromy and lift certificate in one report.")
@common_options
def report(**options):
    return execute(Subcommand.REPORT, options, cmd_report)

import pytest

from holomotion.errors import HolomotionError
from holomotion.models.domain import StrandKind
from holomotion.services.braid import NontrivialMonodromy, monodromy
from holomotion.services.extend import (
    StageFailure,
    check_forgetful_compatibility,
    compatibility_paths,
    extend_motion_inductive,
)
from holomotion.services.motion import is_extension
from holomotion.services.sphere import INF
from holomotion.services.strand_solver import (
    InvalidNewPoint,
    check_new_point,
    solve_new_strand,
    solve_with_schedule,
)
from tests.corpus import family


def test_new_point_must_be_a_new_finite_point(wiggle):
    assert check_new_point(wiggle, 0.25) == 0.25
    for point in [0, 1, 0.5, INF]:
        with pytest.raises(InvalidNewPoint) as excinfo:
            check_new_point(wiggle, point)
        assert excinfo.value.exit_code == 2


def test_solved_strand_keeps_its_margin(fast_settings, wiggle):
    solution = solve_new_strand(wiggle, 0.25, degree=2)
    assert solution.margin >= 0.05
    assert solution.strand.kind == StrandKind.CLOSED_FORM
    assert solution.strand(wiggle.basepoint) == pytest.approx(0.25)
    assert max(solution.report.holomorphy_residuals) < 1e-8
    assert solution.family.size == wiggle.size + 1
    assert is_extension(solution.family, wiggle)
    assert all(cls.is_trivial() for cls in monodromy(solution.family))


def test_solution_is_forgetful_compatible(fast_settings, wiggle):
    solution = solve_with_schedule(wiggle, -0.5)
    checks = check_forgetful_compatibility(solution.family, wiggle)
    assert checks == len(compatibility_paths(wiggle))
    assert checks == wiggle.domain.generator_count + fast_settings.PROBE_POINTS


def test_degree_zero_gives_the_constant_strand(fast_settings, wiggle):
    solution = solve_new_strand(wiggle, 0.25, degree=0)
    assert solution.coefficients.size == 0
    assert solution.strand(0.3j) == pytest.approx(0.25)


def test_solver_refuses_nontrivial_monodromy(fast_settings, winding):
    with pytest.raises(NontrivialMonodromy):
        solve_new_strand(winding, 0.25, degree=2)


def test_inductive_extension_in_two_stages(fast_settings, wiggle):
    result = extend_motion_inductive(wiggle, [0.25, -0.5])
    assert result.family.size == wiggle.size + 2
    assert [record.stage for record in result.stages] == [0, 1]
    assert all(record.margin >= 0.05 for record in result.stages)
    assert all(record.forgetful_checks > 0 for record in result.stages)
    assert is_extension(result.family, wiggle)
    assert all(cls.is_trivial() for cls in monodromy(result.family))
    described = result.describe()
    assert described["stages"][1]["point"] == [-0.5, 0.0]


def test_inductive_extension_reports_the_failing_stage(fast_settings, wiggle):
    with pytest.raises(StageFailure) as excinfo:
        extend_motion_inductive(wiggle, [0.25, 1])
    error = excinfo.value
    assert error.stage == 1
    assert isinstance(error.reason, InvalidNewPoint)
    assert error.exit_code == error.reason.exit_code == 2
    assert isinstance(error, HolomotionError)


def test_inductive_extension_needs_trivial_monodromy(fast_settings):
    with pytest.raises(NontrivialMonodromy):
        extend_motion_inductive(family("winding"), [0.25])


def test_inductive_extension_is_deterministic(fast_settings, wiggle):
    first = extend_motion_inductive(wiggle, [0.25, -0.5])
    second = extend_motion_inductive(wiggle, [0.25, -0.5])
    assert first.describe() == second.describe()
    assert [record.strand for record in first.stages] == [record.strand for record in second.stages]

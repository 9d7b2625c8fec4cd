import numpy as np
import pytest

from holomotion.errors import UsageError
from holomotion.models.domain import DomainKind
from holomotion.services.continuation import PathNotBased, continue_strands, winding_number
from holomotion.services.domains import make_domain
from holomotion.services.expressions import parse_rational
from holomotion.services.motion import ClosedFormStrand, make_motion_family
from holomotion.services.paths import Path
from holomotion.services.sphere import INF, make_configuration
from holomotion.services.validation import ValidationFailure, rebase, sample_motion, validate_motion
from tests.corpus import family


def test_corpus_motions_validate(corpus_name):
    report = validate_motion(family(corpus_name))
    assert report.basepoint_residual <= 1e-12
    assert report.injectivity_margin > 1e-8
    assert max(report.holomorphy_residuals, default=0.0) < 1e-8
    assert all(report.single_valued)


def test_identity_motion_has_zero_residual():
    report = validate_motion(family("identity-punctured"))
    assert report.basepoint_residual == 0.0
    assert report.holomorphy_residuals == (0.0,)
    assert report.sample_count == 256


def test_collision_inside_a_disk_is_an_injectivity_failure():
    domain = make_domain(DomainKind.DISK, 0.5)
    motion = make_motion_family(domain, make_configuration([0, 1, 0.5]), [ClosedFormStrand(parse_rational("lam"))])
    with pytest.raises(ValidationFailure) as excinfo:
        validate_motion(motion)
    assert excinfo.value.axiom == "injectivity"
    assert excinfo.value.witness == pytest.approx(0)
    assert excinfo.value.exit_code == 2


def test_pole_inside_the_domain_is_an_injectivity_failure():
    domain = make_domain(DomainKind.DISK, 0)
    strand = ClosedFormStrand(parse_rational("1/(lam - 1/2)"))
    motion = make_motion_family(domain, make_configuration([0, 1, -2]), [strand])
    with pytest.raises(ValidationFailure) as excinfo:
        validate_motion(motion)
    assert excinfo.value.axiom == "injectivity"
    assert excinfo.value.witness == pytest.approx(0.5)


def test_wrong_base_configuration_fails_the_basepoint_axiom():
    domain = make_domain(DomainKind.PUNCTURED_DISK, 0.5)
    motion = make_motion_family(domain, make_configuration([0, 1, 0.25]), [ClosedFormStrand(parse_rational("lam"))])
    with pytest.raises(ValidationFailure) as excinfo:
        validate_motion(motion)
    assert excinfo.value.axiom == "basepoint"


def test_sample_budget_has_a_floor():
    with pytest.raises(UsageError):
        validate_motion(family("wiggle"), sample_budget=10)


def test_sample_motion_includes_the_frozen_points():
    values = sample_motion(family("algebraic-roots"), [0.3j, -0.4])
    assert values.shape == (2, 4)
    assert values[:, 0] == pytest.approx([0, 0])
    assert values[:, 1] == pytest.approx([1, 1])
    assert values[0, 2] ** 2 == pytest.approx(0.03j + 4)
    assert values[0, 2].real > 0 and values[0, 3].real < 0


def test_continuation_of_the_winding_loop():
    motion = family("winding")
    tracks = continue_strands(motion, motion.domain.generators[0])
    assert tracks.positions.shape[1] == 3
    assert tracks.end_configuration.punctures == pytest.approx(motion.base.punctures)
    assert winding_number(tracks, 2, 0j) == 1
    assert winding_number(tracks, 2, 1 + 0j) == 0
    assert winding_number(tracks, 2, INF) == -1
    assert tracks.min_separation > 0


def test_continuation_needs_a_based_path():
    motion = family("wiggle")
    with pytest.raises(PathNotBased):
        continue_strands(motion, Path.line(-0.5, 0.5))


def test_algebraic_continuation_follows_the_labeled_root():
    motion = family("algebraic-pair")
    tracks = continue_strands(motion, motion.domain.path_to(-0.5))
    end = tracks.positions[-1]
    assert end[2] == pytest.approx(2 - 0.05, abs=1e-9)
    assert end[3] == pytest.approx(-(2 - 0.05), abs=1e-9)
    assert np.all(np.diff(tracks.times) > 0)


def test_rebase_moves_the_basepoint():
    motion = rebase(family("wiggle"), -0.5)
    assert motion.basepoint == -0.5
    assert motion.base.punctures == pytest.approx((0, 1, 0.4))

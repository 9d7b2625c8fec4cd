import numpy as np
import pytest

from holomotion.errors import UsageError
from holomotion.services.braid import BraidWord, NontrivialMonodromy
from holomotion.services.cover import (
    CoverPoint,
    deck_transform,
    forget_last_strand,
    forgetful,
    lift_map,
    lift_path,
    lifts_agree,
    same_point,
    universal_motion_eval,
)
from holomotion.services.expressions import parse_rational
from holomotion.services.motion import ClosedFormStrand, extend_family
from holomotion.services.sphere import INF, chordal_distance
from holomotion.services.validation import sample_motion
from tests.corpus import EXPECTED_WORDS, family


@pytest.mark.parametrize("name", ["wiggle", "algebraic-roots", "gentle-annulus", "winding"])
def test_lift_endpoint_matches_the_motion(name):
    motion = family(name)
    for lam in motion.domain.sample_points(5):
        point = lift_path(motion, motion.domain.path_to(lam))
        expected = sample_motion(motion, [lam])[0]
        for k in range(point.size):
            assert chordal_distance(universal_motion_eval(point, k), expected[k]) <= 1e-10
        assert universal_motion_eval(point, point.size) is INF


def test_universal_motion_eval_rejects_bad_indices():
    motion = family("wiggle")
    point = lift_path(motion, motion.domain.path_to(-0.5))
    with pytest.raises(UsageError):
        universal_motion_eval(point, 7)


def test_lifts_agree_under_refinement():
    for name in ["wiggle", "winding", "algebraic-pair"]:
        motion = family(name)
        assert lifts_agree(motion, motion.domain.generators[0])


def test_deck_transforms(corpus_name):
    motion = family(corpus_name)
    for g in range(motion.domain.generator_count):
        cls = deck_transform(motion, g)
        assert cls.word.to_tokens() == EXPECTED_WORDS[corpus_name][g]
        assert cls.is_trivial() == (cls.word.letters == ())
    with pytest.raises(UsageError):
        deck_transform(motion, motion.domain.generator_count)


def test_lift_map_exists_for_trivial_monodromy(fast_settings):
    lifted = lift_map(family("wiggle"))
    assert len(lifted.probes) == 4
    assert all(probe.agrees for probe in lifted.probes)
    assert lifted.describe()["deck_words"] == [""]
    point = lifted(-0.5)
    assert point.end.punctures == pytest.approx((0, 1, 0.4))


def test_lift_map_is_obstructed_by_nontrivial_monodromy(fast_settings):
    with pytest.raises(NontrivialMonodromy) as excinfo:
        lift_map(family("winding"))
    assert excinfo.value.generator == 0
    assert excinfo.value.mapping_class.word.to_tokens() == "s1 s1"


def test_going_around_the_loop_changes_the_cover_point():
    motion = family("winding")
    loop = motion.domain.generators[0]
    direct = lift_path(motion, motion.domain.path_to(-0.5))
    around = lift_path(motion, loop.then(motion.domain.path_to(-0.5)))
    assert direct.end.punctures == pytest.approx(around.end.punctures)
    assert not same_point(direct, around)
    assert same_point(direct, lift_path(motion, motion.domain.path_to(-0.5)))


def test_forgetful_of_an_extended_lift_is_the_original_lift():
    wiggle = family("wiggle")
    extended = extend_family(wiggle, ClosedFormStrand(parse_rational("1/4")), 0.25)
    for path in list(wiggle.domain.generators) + [wiggle.domain.path_to(-0.5j)]:
        forgotten = forgetful(lift_path(extended, path))
        assert isinstance(forgotten, CoverPoint)
        assert same_point(forgotten, lift_path(wiggle, path))


def test_forget_last_strand_deletes_its_crossings():
    # strands ordered 0, 2, 1 at the start: strand 2 sits at position 2
    word = BraidWord(3, (1, 1, 2), initial_order=(0, 2, 1))
    forgotten = forget_last_strand(word)
    assert forgotten.strand_count == 2
    assert forgotten.letters == ()
    assert forgotten.initial_order == (0, 1)


def test_forgetful_needs_a_moving_puncture():
    motion = family("identity-disk")
    point = lift_path(motion, motion.domain.path_to(0.5))
    reduced = forgetful(point)
    assert reduced.size == 2
    with pytest.raises(UsageError):
        forgetful(reduced)


def test_cover_point_describe_is_json_ready():
    motion = family("wiggle")
    described = lift_path(motion, motion.domain.path_to(-0.5)).describe()
    assert described["word"] == ""
    assert np.allclose(described["end"][2], [0.4, 0.0])


def test_lifts_are_deterministic():
    for name in ["wiggle", "winding", "algebraic-pair"]:
        motion = family(name)
        path = motion.domain.path_to(-0.5)
        first, second = lift_path(motion, path), lift_path(motion, path)
        assert first == second
        assert first.describe() == second.describe()

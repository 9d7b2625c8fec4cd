import pytest

from holomotion.models.domain import DomainKind, StrandKind
from holomotion.services.motion_file import MotionFileError, load_motion_file, parse_motion_text
from holomotion.services.render import motion_toml
from holomotion.services.validation import sample_motion
from tests.corpus import CORPUS, family


def test_corpus_files_parse(corpus_name):
    motion = parse_motion_text(CORPUS[corpus_name])
    assert motion.size >= 3
    assert len(motion.strands) == motion.size - 2


def test_parsed_fields():
    motion = family("pair-twist")
    assert motion.domain.kind == DomainKind.FINITELY_PUNCTURED_DISK
    assert motion.domain.punctures == (0.5, -0.5)
    assert motion.base.punctures == (0, 1, 2.5, 3.5)
    assert family("algebraic-pair").strands[1].kind == StrandKind.ALGEBRAIC_ROOT
    assert family("winding-squared").basepoint == pytest.approx(2**-0.5)


def test_unlisted_strands_are_constant():
    motion = family("identity-punctured")
    assert motion.strands[0](0.3j) == pytest.approx(-1)


BAD_EXPRESSION = """[domain]
kind = "punctured-disk"
basepoint = "1/2"

[base]
points = ["0", "1", "1/2"]

[strand.2]
expr = "lam + * 2"
"""


def test_expression_errors_point_into_the_string():
    with pytest.raises(MotionFileError) as excinfo:
        parse_motion_text(BAD_EXPRESSION)
    error = excinfo.value
    assert error.line == 9
    # 'expr = "' is 8 characters; the '*' is at offset 6 inside the string
    assert error.column == 8 + 1 + 6
    assert error.exit_code == 1


def test_toml_syntax_errors_carry_a_line():
    with pytest.raises(MotionFileError) as excinfo:
        parse_motion_text('[domain]\nkind = "disk"\nbasepoint = \n')
    assert excinfo.value.line == 3


def test_schema_errors_point_at_the_key():
    text = '[domain]\nkind = "sphere"\nbasepoint = 0\n\n[base]\npoints = ["0", "1", "2"]\n'
    with pytest.raises(MotionFileError) as excinfo:
        parse_motion_text(text)
    assert excinfo.value.line == 2
    assert "kind" in excinfo.value.message


def test_missing_section_is_reported():
    with pytest.raises(MotionFileError) as excinfo:
        parse_motion_text('[domain]\nkind = "disk"\nbasepoint = 0\n')
    assert "base" in excinfo.value.message


def test_strand_index_out_of_range():
    text = CORPUS["wiggle"].replace("[strand.2]", "[strand.5]")
    with pytest.raises(MotionFileError) as excinfo:
        parse_motion_text(text)
    assert "strand index" in excinfo.value.message
    assert excinfo.value.line == text.splitlines().index("[strand.5]") + 1


def test_expr_and_polynomial_are_exclusive():
    text = CORPUS["wiggle"] + 'polynomial = "z - lam"\n'
    with pytest.raises(MotionFileError):
        parse_motion_text(text)


def test_normalized_base():
    text = """
[domain]
kind = "disk"
basepoint = 0

[base]
points = ["2", "3", "4", "5"]
normalize = true

[strand.3]
expr = "5 + lam/10"
"""
    motion = parse_motion_text(text)
    assert motion.size == 3
    assert motion.base[2] == pytest.approx(-3)


def test_missing_file(tmp_path):
    with pytest.raises(MotionFileError):
        load_motion_file(tmp_path / "absent.toml")


@pytest.mark.parametrize("name", ["wiggle", "algebraic-roots", "gentle-annulus", "winding-squared"])
def test_written_motion_loads_back_to_the_same_motion(name, tmp_path):
    motion = family(name)
    path = tmp_path / "motion.toml"
    path.write_text(motion_toml(motion), encoding="utf-8")
    again = load_motion_file(path)
    assert again.domain == motion.domain
    assert again.base.punctures == pytest.approx(motion.base.punctures, abs=1e-15)
    points = motion.domain.sample_points(6)
    assert sample_motion(again, points) == pytest.approx(sample_motion(motion, points), abs=1e-12)

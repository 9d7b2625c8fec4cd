"""Motion definition files (TOML).

    [domain]
    kind = "punctured-disk"        # disk | punctured-disk | annulus | finitely-punctured-disk
    basepoint = "1/2"
    radius = 1

    [base]
    points = ["0", "1", "1/2"]     # finite punctures; 0 and 1 first unless normalize = true

    [strand.2]
    expr = "lam"                   # or: polynomial = "z^2 - (lam + 4)"

    [pullback]                     # optional: pull the motion back by a rational map
    map = "lam^2"
    [pullback.domain]
    kind = "punctured-disk"
    basepoint = "0.7071067811865476"

Numbers may be given as TOML numbers or as constant expressions; "inf" names INF.
"""

from __future__ import annotations

import re
import sys
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover
    import tomli as tomllib

from pydantic import BaseModel, ConfigDict, ValidationError, model_validator

from holomotion.errors import InputError
from holomotion.logger import logger
from holomotion.models.domain import DomainKind
from holomotion.services.domains import ParameterDomain, make_domain
from holomotion.services.expressions import (
    Expression,
    ExpressionSyntaxError,
    constant_expression,
    parse_constant,
    parse_expression,
    parse_rational,
)
from holomotion.services.motion import (
    AlgebraicRootStrand,
    ClosedFormStrand,
    MotionFamily,
    make_motion_family,
    normalize_family,
    pullback,
)
from holomotion.services.sphere import INF, SpherePoint, make_configuration

Number = Union[str, int, float]
_DECODE_POSITION = re.compile(r"line (\d+), column (\d+)")


class MotionFileError(InputError):
    def __init__(self, line: int, column: int, message: str):
        self.line, self.column, self.message = line, column, message
        super().__init__(f"line {line}, column {column}: {message}")


class DomainSection(BaseModel):
    model_config = ConfigDict(extra="forbid")

    kind: DomainKind
    basepoint: Number
    center: Number = 0
    radius: Number = 1
    inner_radius: Number = 0
    punctures: List[Number] = []


class BaseSection(BaseModel):
    model_config = ConfigDict(extra="forbid")

    points: List[Number]
    normalize: bool = False


class StrandSection(BaseModel):
    model_config = ConfigDict(extra="forbid")

    expr: Optional[str] = None
    polynomial: Optional[str] = None

    @model_validator(mode="after")
    def one_definition(self):
        if (self.expr is None) == (self.polynomial is None):
            raise ValueError("give exactly one of 'expr' or 'polynomial'")
        return self


class PullbackSection(BaseModel):
    model_config = ConfigDict(extra="forbid")

    map: str
    domain: DomainSection


class MotionFileModel(BaseModel):
    model_config = ConfigDict(extra="forbid")

    domain: DomainSection
    base: BaseSection
    strand: Dict[str, StrandSection] = {}
    pullback: Optional[PullbackSection] = None


def _locate(text: str, section: Sequence[str], key: Optional[str] = None) -> Tuple[int, int]:
    """1-based line and column of ``key`` in ``[section]`` (or of the header itself)."""
    lines = text.splitlines()
    start = 0
    if section:
        header = re.compile(r"^\s*\[\s*" + r"\s*\.\s*".join(re.escape(s) for s in section) + r"\s*\]")
        for n, line in enumerate(lines):
            if header.match(line):
                start = n
                break
        else:
            return 1, 1
    if key is None:
        return start + 1, 1
    assignment = re.compile(r"^\s*" + re.escape(key) + r"\s*=\s*")
    for n in range(start + (1 if section else 0), len(lines)):
        if section and lines[n].lstrip().startswith("["):
            break
        match = assignment.match(lines[n])
        if match:
            return n + 1, match.end() + 1
    return start + 1, 1


def _expression_error(text: str, section: Sequence[str], key: str, error: ExpressionSyntaxError) -> MotionFileError:
    """Points into the quoted expression when the value is a plain string on the key's line."""
    line, column = _locate(text, section, key)
    value = text.splitlines()[line - 1][column - 1 :] if 0 < line <= len(text.splitlines()) else ""
    if value[:1] in ('"', "'"):
        column += 1 + error.position
    return MotionFileError(line, column, error.message)


def _validation_error(text: str, error: ValidationError) -> MotionFileError:
    first = error.errors()[0]
    loc = list(first["loc"])
    while loc and isinstance(loc[-1], int):  # list item
        loc.pop()
    loc = [str(part) for part in loc]
    message = f"{'.'.join(loc) or 'file'}: {first['msg']}"
    if any(re.match(r"^\s*\[\s*" + r"\s*\.\s*".join(re.escape(s) for s in loc) + r"\s*\]", line) for line in text.splitlines()):
        line, column = _locate(text, loc)
    else:
        line, column = _locate(text, loc[:-1], loc[-1] if loc else None)
    return MotionFileError(line, column, message)


def _point(text: str, value: Number, section: Sequence[str], key: str) -> SpherePoint:
    if isinstance(value, (int, float)):
        return complex(value)
    if value.strip().lower() in ("inf", "infinity", "∞"):
        return INF
    try:
        return parse_constant(value)
    except ExpressionSyntaxError as e:
        raise _expression_error(text, section, key, e)


def _domain(text: str, section: DomainSection, where: Sequence[str]) -> ParameterDomain:
    def number(key: str) -> complex:
        point = _point(text, getattr(section, key), where, key)
        if point is INF:
            line, column = _locate(text, where, key)
            raise MotionFileError(line, column, f"{key} must be finite")
        return point

    punctures = []
    for value in section.punctures:
        point = _point(text, value, where, "punctures")
        if point is INF:
            line, column = _locate(text, where, "punctures")
            raise MotionFileError(line, column, "domain punctures must be finite")
        punctures.append(point)
    return make_domain(
        section.kind,
        number("basepoint"),
        center=number("center"),
        radius=number("radius").real,
        inner_radius=number("inner_radius").real,
        punctures=tuple(punctures),
    )


def _strand_index(text: str, key: str, count: int, first: int) -> int:
    if not key.isdigit() or not first <= int(key) < count:
        line, column = _locate(text, ("strand", key))
        raise MotionFileError(line, column, f"strand index {key!r} must be an integer in [{first}, {count - 1}]")
    return int(key)


def parse_motion_text(text: str) -> MotionFamily:
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as e:
        match = _DECODE_POSITION.search(str(e))
        line, column = (int(match.group(1)), int(match.group(2))) if match else (1, 1)
        raise MotionFileError(line, column, str(e).split(" (at ")[0])
    try:
        model = MotionFileModel.model_validate(data)
    except ValidationError as e:
        raise _validation_error(text, e)

    domain = _domain(text, model.domain, ("domain",))
    points = [_point(text, value, ("base",), "points") for value in model.base.points]

    if model.base.normalize:
        expressions: List[Optional[Expression]] = [None] * len(points)
        for key, section in model.strand.items():
            index = _strand_index(text, key, len(points), 0)
            if section.expr is None:
                line, column = _locate(text, ("strand", key), "polynomial")
                raise MotionFileError(line, column, "normalized motions take closed-form strands only")
            expressions[index] = _rational(text, ("strand", key), section.expr)
        family = normalize_family(domain, points, expressions)
    else:
        base = make_configuration(points)
        strands = [ClosedFormStrand(constant_expression(p)) for p in base.moving]
        for key, section in model.strand.items():
            index = _strand_index(text, key, len(base), 2)
            where = ("strand", key)
            if section.expr is not None:
                strands[index - 2] = ClosedFormStrand(_rational(text, where, section.expr))
            else:
                try:
                    polynomial = parse_expression(section.polynomial, allow_z=True)
                except ExpressionSyntaxError as e:
                    raise _expression_error(text, where, "polynomial", e)
                strands[index - 2] = AlgebraicRootStrand(polynomial, base[index], source=section.polynomial.strip())
        family = make_motion_family(domain, base, strands)

    if model.pullback is not None:
        where = ("pullback",)
        new_domain = _domain(text, model.pullback.domain, ("pullback", "domain"))
        family = pullback(family, _rational(text, where, model.pullback.map, key="map"), new_domain)
    return family


def _rational(text: str, where: Sequence[str], source: str, key: str = "expr") -> Expression:
    try:
        return parse_rational(source)
    except ExpressionSyntaxError as e:
        raise _expression_error(text, where, key, e)


def load_motion_file(path: Union[str, Path]) -> MotionFamily:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise MotionFileError(0, 0, f"cannot read {path}: {e.strerror or e}")
    logger.debug(f"Loading motion definition from {path}")
    return parse_motion_text(text)

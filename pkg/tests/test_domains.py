import numpy as np
import pytest

from holomotion.models.domain import DomainKind
from holomotion.services.domains import DomainError, OutsideDomain, make_domain
from holomotion.services.paths import Path, PathMismatch


def test_path_endpoints_are_exact():
    path = Path.line(0.1, 0.7 + 0.3j).then(Path.line(0.7 + 0.3j, -0.2j))
    assert path(0.0) == 0.1
    assert path(1.0) == -0.2j
    assert path.breakpoints[0] == 0.0 and path.breakpoints[-1] == 1.0
    assert path.reverse()(0.0) == -0.2j


def test_loop_around_is_closed_and_counterclockwise():
    loop = Path.loop_around(0j, 0.5)
    assert loop.is_closed
    assert loop(0.25) == pytest.approx(0.5j)
    assert loop(1.0) == 0.5


def test_then_rejects_mismatched_ends():
    with pytest.raises(PathMismatch):
        Path.line(0, 1).then(Path.line(2, 3))


@pytest.mark.parametrize(
    "kind, extra, count",
    [
        (DomainKind.DISK, {}, 0),
        (DomainKind.PUNCTURED_DISK, {}, 1),
        (DomainKind.ANNULUS, {"inner_radius": 0.25}, 1),
        (DomainKind.FINITELY_PUNCTURED_DISK, {"punctures": (0.5j, -0.5j, 0.5)}, 3),
    ],
)
def test_generator_loops_are_based_and_inside(kind, extra, count):
    basepoint = -0.5 if kind == DomainKind.FINITELY_PUNCTURED_DISK else 0.5
    domain = make_domain(kind, basepoint, **extra)
    assert domain.generator_count == count
    assert len(domain.generators) == count
    for loop in domain.generators:
        assert loop.start == basepoint and loop.end == basepoint
        assert domain.contains(loop(np.linspace(0.0, 1.0, 200)))


def test_sample_points_keep_clear_of_the_boundary():
    domain = make_domain(DomainKind.FINITELY_PUNCTURED_DISK, 0, punctures=(0.5,))
    points = domain.sample_points(300)
    assert points.size == 300
    assert domain.boundary_distance(points).min() >= 1e-3
    assert np.array_equal(points, domain.sample_points(300))


def test_path_to_routes_around_holes():
    domain = make_domain(DomainKind.PUNCTURED_DISK, 0.5)
    path = domain.path_to(-0.5)
    assert path.start == 0.5 and path.end == -0.5
    assert domain.contains(path(np.linspace(0.0, 1.0, 500)))

    domain = make_domain(DomainKind.FINITELY_PUNCTURED_DISK, 0, punctures=(0.5,))
    path = domain.path_to(0.9)
    assert path.end == 0.9
    assert domain.contains(path(np.linspace(0.0, 1.0, 500)))


def test_path_to_outside_raises():
    domain = make_domain(DomainKind.DISK, 0)
    with pytest.raises(OutsideDomain):
        domain.path_to(2)


def test_domain_errors():
    with pytest.raises(DomainError):
        make_domain(DomainKind.ANNULUS, 0.5, inner_radius=1.5)
    with pytest.raises(DomainError):
        make_domain(DomainKind.FINITELY_PUNCTURED_DISK, 0)

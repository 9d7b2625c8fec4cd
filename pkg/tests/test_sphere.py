import math

import numpy as np
import pytest

from holomotion.config import Tolerances, settings
from holomotion.services.sphere import (
    INF,
    DegenerateMobius,
    DegenerateTriple,
    InfinitePuncture,
    InvalidPoint,
    Mobius,
    NotNormalized,
    SeparationViolation,
    as_sphere_point,
    chordal_distance,
    configuration_separation,
    make_configuration,
    normalize_mobius,
)


def test_chordal_distance_is_bounded_by_the_diameter():
    assert chordal_distance(0j, INF) == pytest.approx(2.0)
    assert chordal_distance(INF, INF) == 0.0
    assert chordal_distance(1j, -1j) == pytest.approx(2.0)
    assert chordal_distance(2 + 1j, 2 + 1j) == 0.0


def test_chordal_distance_is_symmetric():
    rng = np.random.default_rng(3)
    for a, b in rng.standard_normal((20, 2)) + 1j * rng.standard_normal((20, 2)):
        assert chordal_distance(a, b) == pytest.approx(chordal_distance(b, a))
        assert chordal_distance(a, INF) == pytest.approx(2.0 / math.sqrt(1.0 + abs(a) ** 2))


def test_as_sphere_point():
    assert as_sphere_point(complex("inf")) is INF
    assert as_sphere_point(INF) is INF
    assert as_sphere_point(2) == 2 + 0j
    with pytest.raises(InvalidPoint):
        as_sphere_point(complex("nan"))
    with pytest.raises(InvalidPoint):
        as_sphere_point("not a number")


def test_normalize_mobius_sends_triple_to_zero_one_infinity():
    for p, q, r in [(2j, -1, 3 + 1j), (INF, 1j, 0j), (0.5, INF, -2), (1 + 1j, 2, INF)]:
        mobius = normalize_mobius(p, q, r)
        assert chordal_distance(mobius(p), 0j) < 1e-12
        assert chordal_distance(mobius(q), 1 + 0j) < 1e-12
        assert mobius(r) is INF or chordal_distance(mobius(r), INF) < 1e-12


def test_normalize_mobius_rejects_degenerate_triples():
    with pytest.raises(DegenerateTriple):
        normalize_mobius(1j, 1j, 2)
    with pytest.raises(DegenerateTriple):
        normalize_mobius(INF, 0j, INF)


def test_mobius_compose_with_inverse_is_identity():
    mobius = Mobius.from_entries(2, 1j, 1, 3)
    identity = mobius.compose(mobius.inverse())
    for z in [0j, 1 + 1j, -3.5, 1e3j]:
        assert chordal_distance(identity(z), z) < 1e-12
    assert identity(INF) is INF or chordal_distance(identity(INF), INF) < 1e-12


def test_mobius_rejects_singular_matrices():
    with pytest.raises(DegenerateMobius):
        Mobius.from_entries(1, 2, 2, 4)


def test_make_configuration():
    config = make_configuration([0, 1, 2j, -1])
    assert len(config) == 4
    assert config.moving == (2j, -1 + 0j)
    assert config.append(5).drop_last() == config
    assert config.min_separation() > 0


def test_make_configuration_errors():
    with pytest.raises(NotNormalized):
        make_configuration([1, 0, 2])
    with pytest.raises(InfinitePuncture) as excinfo:
        make_configuration([0, 1, INF])
    assert excinfo.value.exit_code == 2
    with pytest.raises(SeparationViolation):
        make_configuration([0, 1, 1 + 1e-12])


def test_configuration_separation_reports_infinity_as_index_m():
    points = np.array([0, 1, 1e6])
    separation, i, j = configuration_separation(points)
    assert int(i) == 2
    assert int(j) == 3
    assert float(separation) == pytest.approx(2.0 / math.sqrt(1.0 + 1e12))


def test_chordal_distance_satisfies_the_triangle_inequality():
    rng = np.random.default_rng(11)
    scales = np.exp(rng.uniform(-4, 4, (500, 3)))
    triples = scales * np.exp(2j * np.pi * rng.uniform(0, 1, (500, 3)))
    for a, b, c in triples:
        assert chordal_distance(a, c) <= chordal_distance(a, b) + chordal_distance(b, c) + 1e-12
        assert chordal_distance(a, INF) <= chordal_distance(a, b) + chordal_distance(b, INF) + 1e-12


def test_make_configuration_accepts_exactly_the_separated_tuples(monkeypatch):
    monkeypatch.setattr(settings, "TOLERANCES", Tolerances(sep=0.1))
    rng = np.random.default_rng(12)
    accepted = rejected = 0
    for _ in range(400):
        moving = list(0.3 * rng.standard_normal(3) + 0.3j * rng.standard_normal(3))
        points = [0j, 1 + 0j] + moving
        closest = min(chordal_distance(p, q) for i, p in enumerate(points) for q in points[i + 1 :])
        try:
            make_configuration(points)
        except SeparationViolation as e:
            rejected += 1
            assert closest <= 0.1
            assert e.exit_code == 2
        else:
            accepted += 1
            assert closest > 0.1
    assert accepted > 0 and rejected > 0

import numpy as np
import pytest

from holomotion.config import settings
from holomotion.services import flow
from holomotion.services.braid import NontrivialMonodromy
from holomotion.services.flow import FlowBlowup, build_continuous_motion, grid_spec
from holomotion.services.render import beltrami_png, beltrami_svg
from tests.corpus import NONTRIVIAL, TRIVIAL, family


def small_spec(**overrides):
    return grid_spec(parameter_samples=4, **overrides)


def fail_cross_edges(monkeypatch):
    """Makes every flow along a cross edge fold; tree edges are flowed normally."""
    original = flow._cross_edge_check

    def fold(tracks, start_points, mesh, parent_beltrami, spec, parameter):
        raise FlowBlowup(parameter, -1.0)

    def check(*args, **kwargs):
        monkeypatch.setattr(flow, "_flow_edge", fold)
        return original(*args, **kwargs)

    monkeypatch.setattr(flow, "_cross_edge_check", check)


def test_bump_carries_its_center_and_vanishes_outside():
    center, velocity, radius = np.array([0.3 + 0.2j]), np.array([1.0 - 0.5j]), 0.25
    inside = np.array([0.3 + 0.2j])
    outside = np.array([0.3 + 0.2j + 0.26, 0.3 + 0.2j - 0.3j, 5.0])
    assert flow._bump_velocity(inside, center, velocity, radius)[0] == pytest.approx(velocity[0], abs=1e-15)
    assert np.all(flow._bump_velocity(outside, center, velocity, radius) == 0)


def test_bump_is_divergence_free():
    center, velocity, radius = np.array([0j]), np.array([0.7 + 0.4j]), 0.5
    h = 1e-6
    rng = np.random.default_rng(0)
    points = 0.4 * np.sqrt(rng.uniform(0, 1, 20)) * np.exp(2j * np.pi * rng.uniform(0, 1, 20))

    def u(z):
        return flow._bump_velocity(z, center, velocity, radius)

    div = (u(points + h).real - u(points - h).real) / (2 * h) + (u(points + 1j * h).imag - u(points - 1j * h).imag) / (2 * h)
    assert np.abs(div).max() < 1e-6


def test_grid_is_refined_to_resolve_the_bumps():
    spec = grid_spec(cells=80, max_cells=320)
    assert flow._grid_cells(2.0, 1.0, spec) == 80
    assert flow._grid_cells(2.0, 0.125, spec) == 128
    assert flow._grid_cells(2.0, 0.0625, spec) == 256
    assert flow._grid_cells(2.0, 0.03125, spec) == 320


@pytest.mark.parametrize("name", sorted(NONTRIVIAL))
def test_no_continuous_motion_without_trivial_monodromy(name):
    with pytest.raises(NontrivialMonodromy):
        build_continuous_motion(family(name), small_spec())


@pytest.mark.parametrize("name", sorted(TRIVIAL))
def test_continuous_motion_exists_for_trivial_monodromy(name):
    grid = build_continuous_motion(family(name), small_spec(cross_check=False))
    assert grid.samples[0].parent is None
    assert len(grid.samples) >= 2
    for sample in grid.samples:
        assert sample.interpolation_error < 1e-6
        assert sample.jacobian_min > 0
        assert sample.beltrami_sup < 1


@pytest.mark.parametrize("name", sorted(TRIVIAL))
def test_continuous_motion_at_default_settings(name):
    grid = build_continuous_motion(family(name))
    assert len(grid.samples) >= settings.PARAMETER_SAMPLES
    assert settings.GRID_CELLS <= grid.cells <= settings.MAX_GRID_CELLS
    for sample in grid.samples:
        assert sample.interpolation_error < 1e-6
        assert sample.jacobian_min > 0
        assert sample.beltrami_sup < 1
        assert sample.beltrami_jump < 0.1


@pytest.mark.parametrize("name", ["algebraic-pair", "wiggle-squared"])
def test_long_tracks_do_not_fold_at_default_settings(name):
    grid = build_continuous_motion(family(name), grid_spec(cross_check=False))
    assert grid.cells > settings.GRID_CELLS
    assert min(sample.jacobian_min for sample in grid.samples) > 0


def test_grid_quality_and_cross_check():
    grid = build_continuous_motion(family("wiggle"), small_spec())
    base = grid.samples[0]
    assert np.array_equal(base.image, grid.nodes)
    assert base.beltrami_sup == pytest.approx(0, abs=1e-12)
    for sample in grid.samples[1:]:
        assert sample.snapshots >= 1
        assert sample.parent is not None
        # grid nodes far from every strand do not move
        assert sample.image[0, 0] == grid.nodes[0, 0]
    discrepancies = [s.cross_edge_discrepancy for s in grid.samples[1:] if s.cross_edge_discrepancy is not None]
    assert discrepancies
    assert all(np.isfinite(discrepancies))
    assert grid.cross_edge_failures == []


def test_failed_cross_edge_is_recorded(monkeypatch):
    fail_cross_edges(monkeypatch)
    grid = build_continuous_motion(family("wiggle"), small_spec())
    failures = grid.cross_edge_failures
    assert failures
    for sample in grid.samples[1:]:
        if sample.cross_edge_failure is not None:
            assert sample.cross_edge_discrepancy is None
            assert sample.cross_edge_failure.startswith("FlowBlowup")
    assert all(failure.exit_code == 4 for failure in failures)
    assert grid.describe(include_images=False)["samples"][1]["cross_edge_failure"] == grid.samples[1].cross_edge_failure


def test_grid_describe_and_heat_map():
    grid = build_continuous_motion(family("disk-moving"), small_spec(cross_check=False))
    described = grid.describe(include_images=False)
    assert described["shape"] == [grid.cells + 1, grid.cells + 1]
    assert "image_re" not in described["samples"][0]
    assert len(grid.describe()["samples"][1]["image_re"]) == grid.cells + 1

    field = grid.beltrami_field(1)
    assert field.shape == (grid.cells, grid.cells)
    assert beltrami_png(field).startswith(b"\x89PNG")
    assert "<svg" in beltrami_svg(grid, 1)

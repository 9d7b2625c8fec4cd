"""Continuous motions of the whole sphere extending a finite motion with trivial monodromy.

Parameter samples are joined to the basepoint by a spanning tree. Along each tree edge the
strands are continued, and a time-dependent vector field made of compactly supported
divergence-free bumps, one per moving strand, transports the grid of the child from the
grid of its parent. Each bump carries its strand exactly and vanishes outside a disk that
avoids every other puncture, so 0, 1 and a neighborhood of INF stay fixed. The exact flow
preserves area; the grid is refined until the narrowest bump spans several cells so the
piecewise-linear image keeps that property up to discretization error.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import List, Optional, Tuple

import numpy as np
from scipy.sparse import coo_matrix, csr_matrix

from holomotion.config import settings, tolerances
from holomotion.errors import SolverFailure
from holomotion.logger import logger
from holomotion.services.braid import require_trivial_monodromy
from holomotion.services.continuation import StrandTracks, continue_strands
from holomotion.services.domains import ParameterDomain
from holomotion.services.motion import MotionFamily, closed_form_values
from holomotion.services.paths import Path
from holomotion.services.sphere import Configuration
from holomotion.tasks import run_concurrently

MAX_STEP_DOUBLINGS = 4
MAX_SNAPSHOTS = 256
TUBE_CELLS = 4  # grid steps across the narrowest bump radius
SNAPSHOTS_PER_RADIUS = 80


class TubeCollapse(SolverFailure):
    def __init__(self, parameter: complex, separation: float, step: float):
        self.parameter, self.separation, self.step = parameter, separation, step
        super().__init__(
            f"Strands come within {separation:.3e} of each other on the way to {parameter}; "
            f"the grid step {step:.3e} cannot resolve the tubes"
        )


class FlowBlowup(SolverFailure):
    def __init__(self, parameter: complex, jacobian_min: float):
        self.parameter, self.jacobian_min = parameter, jacobian_min
        super().__init__(f"Flow to {parameter} failed: minimum Jacobian {jacobian_min:.3e}")


class CrossEdgeFailure(SolverFailure):
    def __init__(self, parameter: complex, reason: str):
        self.parameter, self.reason = parameter, reason
        super().__init__(f"Cross-edge check into {parameter} failed: {reason}")


@dataclass(frozen=True)
class GridSpec:
    cells: int  # coarsest grid; refined up to max_cells to resolve the bumps
    parameter_samples: int
    flow_steps: int
    max_cells: int
    cross_check: bool = True


def grid_spec(**overrides) -> GridSpec:
    values = dict(
        cells=settings.GRID_CELLS,
        parameter_samples=settings.PARAMETER_SAMPLES,
        flow_steps=settings.FLOW_STEPS,
        max_cells=settings.MAX_GRID_CELLS,
    )
    values.update(overrides)
    return GridSpec(**values)


@dataclass(frozen=True, eq=False)
class GridSample:
    parameter: complex
    parent: Optional[int]
    image: np.ndarray  # (cells + 1, cells + 1) images of the grid nodes
    markers: np.ndarray  # images of the base punctures
    interpolation_error: float
    jacobian_min: float
    beltrami_sup: float
    beltrami_jump: float  # largest change of beltrami_sup between snapshots on the tree edge
    snapshots: int
    cross_edge_discrepancy: Optional[float] = None
    cross_edge_failure: Optional[str] = None


@dataclass(frozen=True, eq=False)
class ContinuousMotionGrid:
    family: MotionFamily
    origin: complex  # lower-left grid node
    step: float
    cells: int
    support_radius: float
    samples: Tuple[GridSample, ...]

    @property
    def nodes(self) -> np.ndarray:
        return _grid_nodes(self.origin, self.step, self.cells)

    @property
    def cross_edge_failures(self) -> List[CrossEdgeFailure]:
        return [CrossEdgeFailure(s.parameter, s.cross_edge_failure) for s in self.samples if s.cross_edge_failure]

    def beltrami_field(self, index: int) -> np.ndarray:
        """|mu| per grid cell (worse of its two triangles), shape (cells, cells)."""
        mu, _ = _beltrami(_operators(self.origin, self.step, self.cells), self.samples[index].image.ravel())
        return np.abs(mu).reshape(self.cells, self.cells, 2).max(axis=2)

    def describe(self, include_images: bool = True) -> dict:
        samples = []
        for sample in self.samples:
            entry = {
                "parameter": [sample.parameter.real, sample.parameter.imag],
                "parent": sample.parent,
                "interpolation_error": sample.interpolation_error,
                "jacobian_min": sample.jacobian_min,
                "beltrami_sup": sample.beltrami_sup,
                "beltrami_jump": sample.beltrami_jump,
                "snapshots": sample.snapshots,
                "cross_edge_discrepancy": sample.cross_edge_discrepancy,
                "cross_edge_failure": sample.cross_edge_failure,
            }
            if include_images:
                entry["image_re"] = sample.image.real.tolist()
                entry["image_im"] = sample.image.imag.tolist()
            samples.append(entry)
        return {
            "origin": [self.origin.real, self.origin.imag],
            "step": self.step,
            "shape": [self.cells + 1, self.cells + 1],
            "support_radius": self.support_radius,
            "samples": samples,
        }


@dataclass(frozen=True, eq=False)
class _Mesh:
    dx: csr_matrix
    dy: csr_matrix
    faces: np.ndarray
    node_count: int


def _grid_nodes(origin: complex, step: float, cells: int) -> np.ndarray:
    ticks = np.arange(cells + 1) * step
    return origin + ticks[None, :] + 1j * ticks[:, None]


def _triangles(cells: int) -> np.ndarray:
    """Two counterclockwise triangles per cell, cell-major."""
    row, col = np.meshgrid(np.arange(cells), np.arange(cells), indexing="ij")
    a = (row * (cells + 1) + col).ravel()
    b, c, d = a + 1, a + cells + 1, a + cells + 2
    return np.stack([np.stack([a, b, d], axis=1), np.stack([a, d, c], axis=1)], axis=1).reshape(-1, 3)


def _operators(origin: complex, step: float, cells: int) -> Tuple[csr_matrix, csr_matrix]:
    """Per-face x and y derivative operators of piecewise-linear functions on the grid."""
    vertices = _grid_nodes(origin, step, cells).ravel()
    faces = _triangles(cells)
    p0, p1, p2 = (vertices[faces[:, k]] for k in range(3))
    e1, e2, e3 = p2 - p1, p0 - p2, p1 - p0
    area = 0.5 * (e1.real * e2.imag - e1.imag * e2.real)
    rows = np.repeat(np.arange(faces.shape[0]), 3)
    cols = faces.ravel()
    dx = -np.column_stack([e1.imag, e2.imag, e3.imag]) / (2.0 * area[:, None])
    dy = np.column_stack([e1.real, e2.real, e3.real]) / (2.0 * area[:, None])
    shape = (faces.shape[0], vertices.size)
    return (
        coo_matrix((dx.ravel(), (rows, cols)), shape=shape).tocsr(),
        coo_matrix((dy.ravel(), (rows, cols)), shape=shape).tocsr(),
    )


def _beltrami(operators: Tuple[csr_matrix, csr_matrix], image: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Beltrami coefficient and Jacobian of the piecewise-linear map per face."""
    dx, dy = operators
    fx, fy = dx @ image, dy @ image
    dz = (fx - 1j * fy) / 2.0
    dc = (fx + 1j * fy) / 2.0
    jacobian = np.abs(dz) ** 2 - np.abs(dc) ** 2
    with np.errstate(divide="ignore", invalid="ignore"):
        mu = np.where(dz != 0, dc / dz, 1.0)
    return mu, jacobian


def _euclidean_separation(positions: np.ndarray) -> np.ndarray:
    """Minimum pairwise distance of the finite punctures per row of ``positions``."""
    gaps = np.abs(positions[..., :, None] - positions[..., None, :])
    size = positions.shape[-1]
    gaps[..., np.arange(size), np.arange(size)] = np.inf
    return gaps.min(axis=(-2, -1))


def _bump_velocity(points: np.ndarray, centers: np.ndarray, velocities: np.ndarray, radius: float) -> np.ndarray:
    """Sum of divergence-free bumps, one per center.

    Each bump is the rotated gradient of w(s) Im(conj(v) (z - c)) with w(s) = (1 - s)^3 and
    s = |z - c|^2 / radius^2: it moves its center with velocity v, is C^1, and vanishes for s >= 1.
    """
    offsets = points[:, None] - centers[None, :]
    s = (offsets.real**2 + offsets.imag**2) / radius**2
    t = np.where(s < 1.0, 1.0 - s, 0.0)
    stream = (np.conj(velocities)[None, :] * offsets).imag
    field = t**3 * velocities[None, :] + (6j / radius**2) * t**2 * stream * offsets
    return field.sum(axis=1)


def _segment_distances(points: np.ndarray, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """(P, k) distances from points to the segments [a_j, b_j]."""
    d = b - a
    length2 = np.maximum(np.abs(d) ** 2, 1e-300)
    s = np.clip(((points[:, None] - a[None, :]) * np.conj(d)[None, :]).real / length2[None, :], 0.0, 1.0)
    return np.abs(points[:, None] - (a[None, :] + s * d[None, :]))


class _EdgeField:
    """Bump field of one tree edge: strands move linearly between track samples."""

    def __init__(self, tracks: StrandTracks, tube: float):
        self.times = tracks.times
        self.positions = tracks.positions
        self.velocities = np.diff(tracks.positions, axis=0) / np.diff(tracks.times)[:, None]
        self.moving = np.arange(2, tracks.strand_count)
        self.tube = tube

    def radius(self, positions: np.ndarray) -> float:
        return min(self.tube, 0.5 * float(_euclidean_separation(positions)))

    def __call__(self, points: np.ndarray, k: int, t: float) -> np.ndarray:
        if self.moving.size == 0:
            return np.zeros_like(points)
        z = self.positions[k] + self.velocities[k] * (t - self.times[k])
        return _bump_velocity(points, z[self.moving], self.velocities[k, self.moving], self.radius(z))

    def active(self, points: np.ndarray, k: int) -> np.ndarray:
        if self.moving.size == 0:
            return np.zeros(points.shape, dtype=bool)
        a, b = self.positions[k, self.moving], self.positions[k + 1, self.moving]
        return (_segment_distances(points, a, b) < self.tube).any(axis=1)

    def reach(self, points: np.ndarray) -> np.ndarray:
        """Indices of the points the edge can move; every other point stays where it is."""
        if self.moving.size == 0:
            return np.zeros(0, dtype=int)
        track = self.positions[:, self.moving]
        box = (
            (points.real > track.real.min() - self.tube)
            & (points.real < track.real.max() + self.tube)
            & (points.imag > track.imag.min() - self.tube)
            & (points.imag < track.imag.max() + self.tube)
        )
        candidates = np.flatnonzero(box)
        near = np.zeros(candidates.size, dtype=bool)
        for k in range(self.times.size - 1):
            near |= self.active(points[candidates], k)
        return candidates[near]


def _rk4_interval(field: _EdgeField, points: np.ndarray, k: int, substeps: int) -> None:
    active = field.active(points, k)
    if not active.any():
        return
    x = points[active]
    t0 = field.times[k]
    dt = (field.times[k + 1] - t0) / substeps
    for s in range(substeps):
        t = t0 + s * dt
        k1 = field(x, k, t)
        k2 = field(x + 0.5 * dt * k1, k, t + 0.5 * dt)
        k3 = field(x + 0.5 * dt * k2, k, t + 0.5 * dt)
        k4 = field(x + dt * k3, k, t + dt)
        x = x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    points[active] = x


def _snapshot_boundaries(tracks: StrandTracks, tube: float) -> List[int]:
    """Track sample indices at which the grid is inspected; the last one is the edge end."""
    steps = np.abs(np.diff(tracks.positions[:, 2:], axis=0))
    travel = float(steps.sum(axis=0).max()) if steps.size else 0.0
    radius = min(tube, 0.5 * float(_euclidean_separation(tracks.positions).min()))
    if radius <= 0:
        count = MAX_SNAPSHOTS
    else:
        count = int(min(MAX_SNAPSHOTS, max(1, math.ceil(travel * SNAPSHOTS_PER_RADIUS / radius))))
    last = tracks.times.size - 1
    indices = {min(last, max(1, int(np.searchsorted(tracks.times, j / count)))) for j in range(1, count + 1)}
    indices.add(last)
    return sorted(indices)


def _grid_cells(half_width: float, radius: float, spec: GridSpec) -> int:
    """Fewest cells per side whose step resolves ``radius``, between spec.cells and spec.max_cells."""
    finest = max(spec.cells, spec.max_cells)
    needed = math.ceil(2.0 * half_width * TUBE_CELLS / radius) if radius > 0 else finest
    return int(min(max(spec.cells, needed), finest))


@dataclass(frozen=True, eq=False)
class _EdgeResult:
    points: np.ndarray
    jacobian_min: float
    beltrami_sup: float
    beltrami_jump: float
    snapshots: int


def _flow_edge(
    tracks: StrandTracks,
    start_points: np.ndarray,
    mesh: _Mesh,
    parent_beltrami: float,
    spec: GridSpec,
    parameter: complex,
) -> _EdgeResult:
    tube = tolerances().tube
    field = _EdgeField(tracks, tube)
    boundaries = set(_snapshot_boundaries(tracks, tube))

    # Faces away from the edge keep the parent's values
    reach = field.reach(start_points)
    moved = np.zeros(mesh.node_count, dtype=bool)
    moved[reach[reach < mesh.node_count]] = True
    touched = moved[mesh.faces].any(axis=1)
    faces, rest = np.flatnonzero(touched), np.flatnonzero(~touched)
    local_operators = (mesh.dx[faces], mesh.dy[faces])
    rest_mu, rest_jacobian = _beltrami((mesh.dx[rest], mesh.dy[rest]), start_points[: mesh.node_count])
    rest_sup = float(np.abs(rest_mu).max(initial=0.0))
    rest_min = float(rest_jacobian.min(initial=np.inf))

    jacobian_min = -np.inf
    for doubling in range(MAX_STEP_DOUBLINGS + 1):
        factor = 2**doubling
        points = start_points.copy()
        local = start_points[reach]
        history = [parent_beltrami]
        jacobian_min = rest_min
        for k in range(tracks.times.size - 1):
            substeps = max(1, math.ceil((tracks.times[k + 1] - tracks.times[k]) * spec.flow_steps * factor))
            _rk4_interval(field, local, k, substeps)
            if k + 1 in boundaries:
                points[reach] = local
                mu, jacobian = _beltrami(local_operators, points[: mesh.node_count])
                jacobian_min = min(jacobian_min, float(jacobian.min(initial=np.inf)))
                history.append(max(rest_sup, float(np.abs(mu).max(initial=0.0))))
        points[reach] = local
        if np.all(np.isfinite(points)) and jacobian_min > 0:
            jumps = np.abs(np.diff(history))
            return _EdgeResult(points, jacobian_min, history[-1], float(jumps.max(initial=0.0)), len(boundaries))
        logger.warning(f"Flow to {parameter} folded (Jacobian {jacobian_min:.3e}); doubling the step count")
    raise FlowBlowup(parameter, float(jacobian_min))


def _spanning_tree(domain: ParameterDomain, parameters: np.ndarray) -> Tuple[List[Optional[int]], List[Optional[Path]]]:
    """Nearest-clear-neighbour tree rooted at index 0; unreachable samples hang off the root."""
    clearance = 0.5 * tolerances().boundary
    count = parameters.size
    parents: List[Optional[int]] = [None] * count
    paths: List[Optional[Path]] = [None] * count
    joined = [0]
    remaining = list(range(1, count))
    while remaining:
        best = None
        for u in remaining:
            for s in joined:
                distance = abs(parameters[u] - parameters[s])
                if best is not None and distance >= best[0]:
                    continue
                if domain.segment_is_clear(parameters[s], parameters[u], clearance):
                    best = (distance, u, s)
        if best is None:
            u, s = remaining[0], 0
            paths[u] = domain.path_to(parameters[u])
        else:
            _, u, s = best
            paths[u] = Path.line(parameters[s], parameters[u])
        parents[u] = s
        joined.append(u)
        remaining.remove(u)
    return parents, paths


def _levels(parents: List[Optional[int]]) -> List[List[int]]:
    depth = [0] * len(parents)
    for u in range(len(parents)):
        v, d = u, 0
        while parents[v] is not None:
            v, d = parents[v], d + 1
        depth[u] = d
    return [[u for u in range(len(parents)) if depth[u] == level] for level in range(1, max(depth, default=0) + 1)]


def _expected(family: MotionFamily, parameter: complex, tracks: Optional[StrandTracks]) -> np.ndarray:
    if tracks is None:
        return family.base.as_array()
    if family.has_algebraic:
        return tracks.positions[-1]
    return closed_form_values(family, np.array([parameter]))[0]


def _chordal_error(a: np.ndarray, b: np.ndarray) -> float:
    scale = np.sqrt((1.0 + np.abs(a) ** 2) * (1.0 + np.abs(b) ** 2))
    return float((2.0 * np.abs(a - b) / scale).max(initial=0.0))


def build_continuous_motion(family: MotionFamily, spec: Optional[GridSpec] = None) -> ContinuousMotionGrid:
    """Extends the motion of the punctures to grid homeomorphisms over sampled parameters.

    Raises NontrivialMonodromy first when no continuous extension exists.
    """
    spec = spec or grid_spec()
    require_trivial_monodromy(family)

    domain = family.domain
    x0 = family.basepoint
    samples = domain.sample_points(spec.parameter_samples)
    parameters = np.concatenate([[x0], samples[np.abs(samples - x0) > 0]])
    parents, paths = _spanning_tree(domain, parameters)
    levels = _levels(parents)

    tracks: List[Optional[StrandTracks]] = [None] * parameters.size
    configurations: List[Configuration] = [family.base] + [None] * (parameters.size - 1)
    for level in levels:

        def track(u: int) -> StrandTracks:
            return continue_strands(family, paths[u], start=configurations[parents[u]])

        for u, result in zip(level, run_concurrently(track, level, "flow-tracks")):
            tracks[u] = result
            configurations[u] = result.end_configuration

    moduli = [np.abs(t.positions).max() for t in tracks if t is not None] + [np.abs(family.base.as_array()).max()]
    half_width = float(max(moduli)) + 1.0
    separations = {u: float(_euclidean_separation(t.positions).min()) for u, t in enumerate(tracks) if t is not None}
    narrowest = min([float(_euclidean_separation(family.base.as_array()))] + list(separations.values()))
    radius = min(tolerances().tube, 0.5 * narrowest)
    cells = _grid_cells(half_width, radius, spec)
    step = 2.0 * half_width / cells
    origin = complex(-half_width, -half_width)
    for u, separation in separations.items():
        if separation < 4.0 * step:
            raise TubeCollapse(complex(parameters[u]), separation, step)
    logger.debug(f"Grid of {cells} cells per side, step {step:.3e}, narrowest bump {radius:.3e}")

    nodes = _grid_nodes(origin, step, cells).ravel()
    mesh = _Mesh(*_operators(origin, step, cells), faces=_triangles(cells), node_count=nodes.size)
    identity_mu, identity_jacobian = _beltrami((mesh.dx, mesh.dy), nodes)
    points: List[Optional[np.ndarray]] = [np.concatenate([nodes, family.base.as_array()])] + [None] * (parameters.size - 1)
    results: List[Optional[GridSample]] = [
        GridSample(
            parameter=complex(x0),
            parent=None,
            image=nodes.reshape(cells + 1, cells + 1),
            markers=family.base.as_array(),
            interpolation_error=0.0,
            jacobian_min=float(identity_jacobian.min()),
            beltrami_sup=float(np.abs(identity_mu).max()),
            beltrami_jump=0.0,
            snapshots=0,
        )
    ] + [None] * (parameters.size - 1)

    for level in levels:

        def flow(u: int) -> _EdgeResult:
            parent = parents[u]
            return _flow_edge(tracks[u], points[parent], mesh, results[parent].beltrami_sup, spec, complex(parameters[u]))

        for u, edge in zip(level, run_concurrently(flow, level, "flow")):
            markers = edge.points[mesh.node_count :]
            points[u] = edge.points
            results[u] = GridSample(
                parameter=complex(parameters[u]),
                parent=parents[u],
                image=edge.points[: mesh.node_count].reshape(cells + 1, cells + 1),
                markers=markers,
                interpolation_error=_chordal_error(markers, _expected(family, complex(parameters[u]), tracks[u])),
                jacobian_min=edge.jacobian_min,
                beltrami_sup=edge.beltrami_sup,
                beltrami_jump=edge.beltrami_jump,
                snapshots=edge.snapshots,
            )
            logger.debug(
                f"Grid at {parameters[u]:.4f}: error {results[u].interpolation_error:.2e}, "
                f"Jacobian {edge.jacobian_min:.3e}, |mu| {edge.beltrami_sup:.3f}"
            )

    if spec.cross_check:
        results = _cross_edge_check(family, parameters, parents, configurations, points, results, mesh, spec)

    grid = ContinuousMotionGrid(
        family=family,
        origin=origin,
        step=step,
        cells=cells,
        support_radius=half_width,
        samples=tuple(results),
    )
    logger.info(
        f"Continuous motion built on {parameters.size} parameter sample(s): "
        f"max error {max(s.interpolation_error for s in grid.samples):.2e}, "
        f"min Jacobian {min(s.jacobian_min for s in grid.samples):.3e}, "
        f"max |mu| {max(s.beltrami_sup for s in grid.samples):.3f}"
    )
    if grid.cross_edge_failures:
        logger.warning(f"{len(grid.cross_edge_failures)} cross-edge check(s) failed")
    return grid


def _cross_edge_check(family, parameters, parents, configurations, points, results, mesh, spec):
    """Flows each sample's grid from its nearest non-tree neighbour and records the discrepancy or the failure."""
    clearance = 0.5 * tolerances().boundary
    domain = family.domain

    def discrepancy(u: int) -> Tuple[Optional[float], Optional[str]]:
        candidates = [
            w
            for w in np.argsort(np.abs(parameters - parameters[u]))
            if w != u and w != parents[u] and parents[w] != u
            and domain.segment_is_clear(parameters[w], parameters[u], clearance)
        ]
        if not candidates:
            return None, None
        w = int(candidates[0])
        try:
            tracks = continue_strands(family, Path.line(parameters[w], parameters[u]), start=configurations[w])
            edge = _flow_edge(tracks, points[w], mesh, results[w].beltrami_sup, spec, complex(parameters[u]))
        except SolverFailure as e:
            logger.warning(f"Cross-edge check into {parameters[u]} from {parameters[w]} failed: {e}")
            return None, f"{e.cause}: {e}"
        return float(np.abs(edge.points[: mesh.node_count] - points[u][: mesh.node_count]).max()), None

    nodes = list(range(1, parameters.size))
    values = run_concurrently(discrepancy, nodes, "flow-cross")
    updated = list(results)
    for u, (value, failure) in zip(nodes, values):
        updated[u] = replace(results[u], cross_edge_discrepancy=value, cross_edge_failure=failure)
    return updated

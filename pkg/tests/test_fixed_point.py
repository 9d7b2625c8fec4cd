import math

import numpy as np
import pytest

from holomotion.errors import UsageError
from holomotion.services.fixed_point import (
    Diverged,
    FixedPointProblem,
    fixed_point_iterate,
    probe_uniqueness,
)

TARGET = 0.3 - 0.2j


def test_zero_operator_converges_in_one_update():
    problem = FixedPointProblem(TARGET, lambda g: np.zeros_like(g))
    result = fixed_point_iterate(problem, np.zeros((4, 4), dtype=complex))
    assert result.iterations == 1
    assert np.allclose(result.solution, TARGET)


def test_half_identity_converges_to_twice_the_target():
    problem = FixedPointProblem(TARGET, lambda g: 0.5 * g)
    result = fixed_point_iterate(problem, np.zeros(16, dtype=complex))
    assert np.abs(result.solution - 2 * TARGET).max() < 1e-10
    assert result.contraction_rates[1:] == pytest.approx(0.5, rel=1e-3)


def test_uniqueness_probe_agrees_from_different_starts():
    problem = FixedPointProblem(TARGET, lambda g: 0.5 * g)
    initials = [np.zeros(8), np.ones(8), np.linspace(-3, 3, 8) * 1j]
    report = probe_uniqueness(problem, initials)
    assert report.agrees
    assert report.spread <= 1e-9
    assert len(report.solutions) == 3


def test_uniqueness_probe_needs_three_starts():
    problem = FixedPointProblem(TARGET, lambda g: 0.5 * g)
    with pytest.raises(UsageError):
        probe_uniqueness(problem, [np.zeros(2), np.ones(2)])


def test_expanding_operator_diverges():
    problem = FixedPointProblem(TARGET, lambda g: 2.0 * g, max_iterations=50)
    with pytest.raises(Diverged) as excinfo:
        fixed_point_iterate(problem, np.zeros(4))
    assert excinfo.value.exit_code == 4
    assert excinfo.value.max_iterations == 50


def test_initial_function_must_be_finite():
    problem = FixedPointProblem(TARGET, lambda g: 0.5 * g)
    with pytest.raises(UsageError):
        fixed_point_iterate(problem, np.array([np.nan, 0.0]))


def test_convergence_is_within_a_factor_two_of_the_a_priori_bound():
    rate = 0.5

    def operator(g):
        return 0.3 * np.roll(g, 1) + 0.2 * np.conj(g)

    problem = FixedPointProblem(TARGET, operator)
    initial = np.linspace(-1, 1, 12) + 0.5j
    result = fixed_point_iterate(problem, initial)
    first = result.increments[0]
    for n, increment in enumerate(result.increments):
        assert increment <= 2 * first * rate**n
    assert np.all(result.contraction_rates <= 2 * rate)

    predicted = math.ceil(math.log(problem.tol / first) / math.log(rate))
    assert result.iterations <= predicted + 1
    residual = np.abs(result.solution - (TARGET + operator(result.solution))).max()
    assert residual < problem.tol

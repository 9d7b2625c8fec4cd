import pytest

from holomotion.config import Tolerances, settings
from tests.corpus import CORPUS, TRIVIAL, family


@pytest.fixture(autouse=True)
def pristine_settings(monkeypatch):
    """Every test starts from the default seed, budgets and tolerances."""
    monkeypatch.setattr(settings, "RANDOM_SEED", 0)
    monkeypatch.setattr(settings, "TOLERANCES", Tolerances())
    yield settings


@pytest.fixture
def fast_settings(monkeypatch):
    """Smaller budgets for the solver and lift tests."""
    monkeypatch.setattr(settings, "VALIDATION_SAMPLES", 128)
    monkeypatch.setattr(settings, "PROBE_POINTS", 4)
    monkeypatch.setattr(settings, "PARAMETER_SAMPLES", 4)
    monkeypatch.setattr(settings, "SOLVER_STARTS", 4)
    monkeypatch.setattr(settings, "DEGREE_SCHEDULE", [2, 4])
    return settings


@pytest.fixture(params=sorted(CORPUS))
def corpus_name(request):
    return request.param


@pytest.fixture(params=sorted(TRIVIAL))
def trivial_name(request):
    return request.param


@pytest.fixture
def wiggle():
    return family("wiggle")


@pytest.fixture
def winding():
    return family("winding")


@pytest.fixture
def motion_dir(tmp_path):
    """Writes corpus entries as .toml files and returns a lookup by name."""

    def write(name: str, text: str = None):
        path = tmp_path / f"{name}.toml"
        path.write_text(CORPUS[name] if text is None else text, encoding="utf-8")
        return path

    return write

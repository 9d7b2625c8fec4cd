from typing import List

from pydantic import BaseModel, ConfigDict
from pydantic_settings import BaseSettings, SettingsConfigDict


class Tolerances(BaseModel):
    """Global tolerance table. Every numeric threshold of the library lives here."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    eq: float = 1e-12  # chordal distance below which two sphere points are equal
    sep: float = 1e-8  # minimum chordal separation of distinct punctures
    det: float = 1e-12  # minimum |ad - bc| of a Mobius matrix
    track: float = 1e-6  # minimum separation along continuation tracks
    boundary: float = 1e-3  # clearance of loops and samples from domain boundary
    circle_radius: float = 1e-3  # circle-mean radius for holomorphy residuals
    holomorphy: float = 1e-8  # largest accepted holomorphy residual
    min_step: float = 1e-12  # smallest continuation step before giving up
    tube: float = 0.1  # bump field radius cap for continuous motions
    margin_min: float = 0.05  # required clearance of a solved strand
    fixed_point: float = 1e-10  # sup-norm increment for fixed-point convergence


class Settings(BaseSettings):
    # Project Information
    PROJECT_NAME: str = "holomotion"
    APP_VERSION: str = "1.0.0"
    ENVIRONMENT: str = "development"
    LOGGING_LEVEL: str = "INFO"  # Logging level (e.g., DEBUG, INFO, WARNING, ERROR)

    # Tolerance table (override with HOLOMOTION_TOLERANCES__sep=1e-9 or --tolerance sep=1e-9)
    TOLERANCES: Tolerances = Tolerances()

    # Sampling budgets
    INITIAL_SAMPLES: int = 256  # continuation samples per path before refinement
    VALIDATION_SAMPLES: int = 256
    CIRCLE_POINTS: int = 16  # points on each holomorphy circle
    PROBE_POINTS: int = 16  # lift_map path-independence probes
    LOOP_SAMPLES: int = 64  # points per generator loop fed to the strand solver
    PARAMETER_SAMPLES: int = 16  # continuous motion parameter samples
    GRID_CELLS: int = 80  # coarsest cells per side of continuous motion grids
    MAX_GRID_CELLS: int = 320  # refinement cap when resolving narrow bumps
    FLOW_STEPS: int = 256  # RK4 steps per unit of track time

    # Strand solver
    SOLVER_STARTS: int = 16
    DEGREE_SCHEDULE: List[int] = [2, 4, 8]
    MAX_ITERATIONS: int = 1000  # fixed-point iteration cap

    # Execution
    RANDOM_SEED: int = 0
    MAX_CONCURRENT_TASKS: int = 4
    OUTPUT_DIR: str = "reports"

    # Derived
    REPORT_VERSION: str = ""

    # Pydantic settings configuration
    model_config = SettingsConfigDict(
        env_file=".env",
        env_file_encoding="utf-8",
        env_prefix="HOLOMOTION_",
        env_nested_delimiter="__",
        case_sensitive=True,  # Important for env vars
        extra="ignore",
    )

    # Initialization and Validation
    def __init__(self, **values):
        super().__init__(**values)
        self.REPORT_VERSION = f"{self.PROJECT_NAME}/{self.APP_VERSION}"
        self.DEGREE_SCHEDULE = sorted({d for d in self.DEGREE_SCHEDULE if d >= 0})

    def is_dev(self) -> bool:
        return self.ENVIRONMENT == "development"


settings = Settings()


def tolerances() -> Tolerances:
    """Returns the tolerance table currently in force."""
    return settings.TOLERANCES

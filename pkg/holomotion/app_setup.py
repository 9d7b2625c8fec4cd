import click

from holomotion.api import cli
from holomotion.config import settings
from holomotion.logger import logger


def create_cli() -> click.Group:
    """Creates and configures the command-line application."""
    setup_numerics()
    setup_output()
    return cli


def setup_numerics() -> None:
    """Logs the numeric configuration every run starts from."""
    logger.info("Setting up numerics")

    tolerances = ", ".join(f"{k}={v:g}" for k, v in settings.TOLERANCES.model_dump().items())
    logger.debug(f"Tolerances: {tolerances}")
    logger.debug(f"Seed {settings.RANDOM_SEED}, {settings.MAX_CONCURRENT_TASKS} worker(s)")


def setup_output() -> None:
    """Reports where artifacts go by default."""
    logger.info("Setting up output")

    if settings.is_dev():
        logger.info(f"Default output directory: {settings.OUTPUT_DIR}")

from holomotion.app_setup import create_cli
from holomotion.logger import logger

cli = create_cli()


def run() -> None:
    """Console script entry point."""
    cli()


if __name__ == "__main__":
    logger.info("Starting holomotion directly from main.py")
    run()

# Command-line surface definition

from .commands import cli

# holomotion/tasks/__init__.py
# Concurrent dispatch of independent work units (generator loops, probes, solver starts).

from .pool import run_concurrently

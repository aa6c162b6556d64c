# Services module
from .engine import CitationSimulator, run_simulation
from .sweep import calibrate, run_sweep, trend_statistics

__all__ = ["CitationSimulator", "run_simulation", "run_sweep", "trend_statistics", "calibrate"]

# Journal Impact Factor Simulator
__version__ = "1.0.0"

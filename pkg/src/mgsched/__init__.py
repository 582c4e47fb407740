"""Day-ahead scheduling of isolated microgrids under wind, PV and load uncertainty."""

__version__ = "0.1.0"

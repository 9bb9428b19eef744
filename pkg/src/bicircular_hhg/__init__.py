"""High-harmonic generation driven by bicircular light with quantum fluctuations."""

__version__ = "0.1.0"

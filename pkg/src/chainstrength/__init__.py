"""Chain-strength selection for minor-embedded J1-J2 Ising problems."""
__version__ = "0.1.0"

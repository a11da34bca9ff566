"""Task-oriented multi-user semantic communications over an L-MMSE MIMO uplink."""

__version__ = "0.1.0"

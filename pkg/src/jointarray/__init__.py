"""Jointly CRB-optimal sparse Tx/Rx arrays and waveforms for active sensing."""

__version__ = "0.1.0"

"""Detection of dietary-supplement adverse-event and indication signals
in short social-media texts."""

__version__ = "0.1.0"

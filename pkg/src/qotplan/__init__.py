"""QoT estimation and multi-period flex-grid planning with an ML NLI solver."""

__version__ = "0.1.0"

"""Two-party privacy-preserving SAT verification of BGP peering agreements."""

__version__ = "0.1.0"

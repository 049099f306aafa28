"""Daily temperature trend, seasonality, and range dynamics for GHCN stations."""

__version__ = "0.1.0"

"""Desk-scale Chinese encoder pre-training stack."""

__version__ = "0.1.0"
CONFIG_SCHEMA_VERSION = 1

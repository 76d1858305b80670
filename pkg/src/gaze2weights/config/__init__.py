"""Configuration for gaze2weights."""

from .settings import RunConfig, Settings, settings

__all__ = ["RunConfig", "Settings", "settings"]

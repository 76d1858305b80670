"""Shared utilities for the gaze2weights library."""

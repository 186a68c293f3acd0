"""Sidecar error hierarchy with CLI exit codes."""

from __future__ import annotations


class SidecarError(Exception):
    """Base class; ``exit_code`` is what the CLI returns for it."""

    exit_code = 1


class ConfigError(SidecarError):
    """Invalid flag values, checkpoint descriptors, or device selectors."""

    exit_code = 1


class InputError(SidecarError):
    """Unreadable or undecodable input rejected in --strict mode."""

    exit_code = 1

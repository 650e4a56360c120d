"""Exact commensurability growth of lattices in unipotent groups."""

__version__ = "0.1.0"

from .malcev import list_groups, load_group  # noqa: F401

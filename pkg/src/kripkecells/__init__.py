"""Canonical finite models and common-knowledge cell constructions for multi-agent S5."""

from .errors import CapExceeded, ConstructionError, FormulaError, KripkeCellsError, PreconditionError
from .formula import Workspace, parse, render

__version__ = "0.1.0"

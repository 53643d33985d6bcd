"""Synthesis inequalities: affine expressions, block assembly and SDPA I/O."""

from .affine import NEG, PSD, Affine, AssemblyError, Constraint, LmiSystem, VarRegistry, he
from .assembly import SynthesisScalars, build_theorem1, build_theorem2, parameterize_X2

__all__ = [
    "NEG",
    "PSD",
    "Affine",
    "AssemblyError",
    "Constraint",
    "LmiSystem",
    "VarRegistry",
    "he",
    "SynthesisScalars",
    "build_theorem1",
    "build_theorem2",
    "parameterize_X2",
]

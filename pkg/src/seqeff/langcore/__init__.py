"""Core language: syntax, parsing, printing, subtyping and macro expansion."""

from . import syntax
from .lang import Language
from .reader import ParseError
from .subtype import Subtyper, subst_ty, unfold_ty

__all__ = ["Language", "ParseError", "Subtyper", "subst_ty", "syntax", "unfold_ty"]

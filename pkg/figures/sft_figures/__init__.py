"""Standalone figure scripts over sft's delimited exports.

Strictly read-only consumers of the CSV files; no dependency on the sft
package itself. Fixed style, deterministic rasterization: rerunning a
script on identical inputs reproduces the image byte for byte.
"""

__version__ = "0.1.0"

from .recipes import FigureRecipe, SchemaError

__all__ = ["FigureRecipe", "SchemaError", "__version__"]

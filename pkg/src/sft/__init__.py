"""Sound field translation: record, expand, translate, listen, measure."""

__version__ = "0.1.0"

from . import (binaural, capture, expansion, field, fileio, metrics, render,
               scene, sphmath)
from .errors import (AliasingError, ConvergenceError, ModelError, SftError,
                     SingularityError, UnsupportedGridError, ValidationError)

__all__ = [
    "binaural", "capture", "expansion", "field", "fileio", "metrics",
    "render", "scene", "sphmath",
    "AliasingError", "ConvergenceError", "ModelError", "SftError",
    "SingularityError", "UnsupportedGridError", "ValidationError",
    "__version__",
]

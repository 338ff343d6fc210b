"""Export trained ensemble logits into the .lga archive format."""

from .export import ExportError, ExportJob, export

__version__ = "0.1.0"

__all__ = ["ExportError", "ExportJob", "export", "__version__"]

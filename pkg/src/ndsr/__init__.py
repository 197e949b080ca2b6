"""Network design with service requirements: path enumeration and
branch-and-cut-and-price over a path-based formulation."""

from .core import Instance, Path, load_instance, save_instance, validate_instance, path_metrics

__all__ = ["Instance", "Path", "load_instance", "save_instance", "validate_instance", "path_metrics"]
__version__ = "0.1.0"

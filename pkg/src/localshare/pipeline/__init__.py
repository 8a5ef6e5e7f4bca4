from .config import MethodSpec, RunConfig, comparison_grid
from .stages import run

__all__ = ["MethodSpec", "RunConfig", "run", "comparison_grid"]

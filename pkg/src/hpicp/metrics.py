__all__ = ["relative_error"]

from .errors import UsageError
from .mesh import Mesh
from .spaces import GridFunction, lr_norm


def relative_error(c: GridFunction, c_true: GridFunction, mesh: Mesh) -> float:
    """Relative L^2 reconstruction error |c - c_true| / |c_true|"""
    scale = lr_norm(c_true, 2, mesh)
    if scale == 0.0:
        raise UsageError("Relative error is undefined for a zero reference")
    return lr_norm(c - c_true, 2, mesh) / scale

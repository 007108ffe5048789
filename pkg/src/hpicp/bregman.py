__all__ = ["bregman_distance"]

import math

from .mesh import Mesh
from .penalty import PenaltySpec, theta_value
from .spaces import GridFunction, pairing


def bregman_distance(
    theta: PenaltySpec, z: GridFunction, x: GridFunction, xi: GridFunction, mesh: Mesh
) -> float:
    """Bregman distance D_xi Theta(z, x) = Theta(z) - Theta(x) - <xi, z - x>

    ``xi`` must be a subgradient of Theta at ``x``; the iterations maintain
    this through x = conjugate_grad(xi).
    """
    return math.fsum(
        [
            theta_value(theta, z, mesh),
            -theta_value(theta, x, mesh),
            -pairing(xi, z - x, mesh),
        ]
    )

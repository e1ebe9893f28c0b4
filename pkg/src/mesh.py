"""Vertex-centred radial meshes for finite-volume discretizations in N dimensions.

Node i owns the control volume between the midpoints to its neighbours (clipped to the ends of the
mesh), measured with r^{N-1} dr: V_i = (r_{i+1/2}^N - r_{i-1/2}^N) / N.
"""
import dataclasses
import functools
import math
from typing import Sequence, Tuple

import numpy as np

from src.config import config
from src.errors import MeshError


@dataclasses.dataclass(frozen=True)
class RadialMesh:
    N: int
    nodes: np.ndarray

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=float)
        if int(self.N) != self.N or self.N < 1:
            raise MeshError(f"mesh dimension must be an integer >= 1, got {self.N}")
        if nodes.ndim != 1 or nodes.size < 3:
            raise MeshError("a radial mesh needs at least three nodes")
        if nodes[0] < 0.0 or np.any(np.diff(nodes) <= 0.0):
            raise MeshError("mesh nodes must be nonnegative and strictly increasing")
        object.__setattr__(self, "N", int(self.N))
        object.__setattr__(self, "nodes", nodes)

    @property
    def R(self) -> float:
        return float(self.nodes[-1])

    @property
    def inner(self) -> float:
        return float(self.nodes[0])

    @property
    def is_ball(self) -> bool:
        return self.nodes[0] == 0.0

    @property
    def size(self) -> int:
        return int(self.nodes.size)

    @property
    def h_min(self) -> float:
        return float(np.min(np.diff(self.nodes)))

    @property
    def faces(self) -> np.ndarray:
        """Control-volume boundaries: the ends of the mesh and the midpoints between nodes."""
        mid = 0.5 * (self.nodes[1:] + self.nodes[:-1])
        return np.concatenate(([self.nodes[0]], mid, [self.nodes[-1]]))

    @property
    def volumes(self) -> np.ndarray:
        faces = self.faces
        return (faces[1:] ** self.N - faces[:-1] ** self.N) / self.N

    @functools.cached_property
    def coefficients(self) -> Tuple[np.ndarray, np.ndarray]:
        """Weights of (u_{i+1} - u_i) and (u_{i-1} - u_i) in the discrete Laplacian at node i.

        At the origin of a ball the lower weight vanishes and the upper one reduces to 2N / r_1^2.
        """
        faces = self.faces[1:-1]
        volumes = self.volumes
        h = np.diff(self.nodes)
        upper = np.zeros(self.size)
        lower = np.zeros(self.size)
        upper[:-1] = faces ** (self.N - 1) / (h * volumes[:-1])
        lower[1:] = faces ** (self.N - 1) / (h * volumes[1:])
        return upper, lower

    @property
    def active(self) -> slice:
        """Nodes updated by the scheme; the rest carry Dirichlet data."""
        return slice(0 if self.is_ball else 1, self.size - 1)

    def node_index(self, r: float) -> int:
        """Index of the node at radius ``r``.

        Raises:
            MeshError: if no node lies within ``snap_tol`` (relative) of ``r``.
        """
        i = int(np.argmin(np.abs(self.nodes - r)))
        if abs(self.nodes[i] - r) > config.supersolution.snap_tol * max(abs(r), 1.0):
            raise MeshError(f"r={r:.15g} is not a mesh node (nearest {self.nodes[i]:.15g}); snap the mesh first")
        return i


def uniform_ball(N: int, R: float, nodes: int) -> RadialMesh:
    return RadialMesh(N=N, nodes=np.linspace(0.0, R, nodes))


def uniform_annulus(N: int, inner: float, R: float, nodes: int) -> RadialMesh:
    if not 0.0 < inner < R:
        raise MeshError(f"annulus needs 0 < inner < R, got ({inner}, {R})")
    return RadialMesh(N=N, nodes=np.linspace(inner, R, nodes))


def snapped(N: int, inner: float, R: float, h: float, junction: float) -> RadialMesh:
    """A mesh of spacing at most ``h`` on [inner, R] with ``junction`` as a node."""
    if not inner < junction < R:
        raise MeshError(f"junction {junction} must lie strictly inside ({inner}, {R})")
    left = int(math.ceil((junction - inner) / h)) + 1
    right = int(math.ceil((R - junction) / h)) + 1
    nodes = np.concatenate((np.linspace(inner, junction, max(left, 2)), np.linspace(junction, R, max(right, 2))[1:]))
    return RadialMesh(N=N, nodes=nodes)


def from_nodes(N: int, nodes: Sequence[float]) -> RadialMesh:
    return RadialMesh(N=N, nodes=np.asarray(nodes, dtype=float))

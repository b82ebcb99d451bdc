"""
Spatial Grid

Uniform Cartesian grid in oscillator units. Fields live on arrays of shape
(nx, ny, nz); an axis with a single point is integrated out (1D/2D reduction).

Hard-wall axes span [-L, L] including both end points, which are pinned to zero.
Periodic axes use n points starting at -L with spacing 2L/n.
"""

from dataclasses import dataclass
from functools import cached_property
from typing import List, Literal, Tuple

import numpy as np
import scipy.sparse as sp

from app.core.errors import ShapeError

Boundary = Literal["hard_wall", "periodic"]
Scheme = Literal["forward", "centered"]

AXIS_NAMES = ("x", "y", "z")


@dataclass(frozen=True)
class Axis:
    points: int
    half_extent: float = 0.0

    @property
    def reduced(self) -> bool:
        return self.points == 1


@dataclass(frozen=True)
class Grid:
    x: Axis
    y: Axis
    z: Axis
    boundary: Boundary = "hard_wall"

    def __post_init__(self) -> None:
        for name, axis in zip(AXIS_NAMES, self.axes):
            if axis.points < 1:
                raise ShapeError("Axis needs at least one point", details={"axis": name})
            if not axis.reduced and axis.points < 3:
                raise ShapeError("Active axis needs at least three points", details={"axis": name})
            if not axis.reduced and axis.half_extent <= 0:
                raise ShapeError("Active axis needs a positive extent", details={"axis": name})

    @classmethod
    def line(cls, points: int, half_extent: float, boundary: Boundary = "hard_wall") -> "Grid":
        """1D grid along z"""
        return cls(x=Axis(1), y=Axis(1), z=Axis(points, half_extent), boundary=boundary)

    @property
    def axes(self) -> Tuple[Axis, Axis, Axis]:
        return (self.x, self.y, self.z)

    @property
    def shape(self) -> Tuple[int, int, int]:
        return (self.x.points, self.y.points, self.z.points)

    @property
    def size(self) -> int:
        return int(np.prod(self.shape))

    @property
    def periodic(self) -> bool:
        return self.boundary == "periodic"

    @property
    def active_axes(self) -> List[int]:
        return [i for i, axis in enumerate(self.axes) if not axis.reduced]

    @property
    def reduced_axes(self) -> List[int]:
        return [i for i, axis in enumerate(self.axes) if axis.reduced]

    def spacing(self, index: int) -> float:
        axis = self.axes[index]
        if axis.reduced:
            return 1.0
        if self.periodic:
            return 2 * axis.half_extent / axis.points
        return 2 * axis.half_extent / (axis.points - 1)

    @property
    def spacings(self) -> Tuple[float, float, float]:
        return tuple(self.spacing(i) for i in range(3))  # type: ignore[return-value]

    def coordinates(self, index: int) -> np.ndarray:
        axis = self.axes[index]
        if axis.reduced:
            return np.zeros(1)
        if self.periodic:
            return -axis.half_extent + self.spacing(index) * np.arange(axis.points)
        return np.linspace(-axis.half_extent, axis.half_extent, axis.points)

    @cached_property
    def mesh(self) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        return tuple(  # type: ignore[return-value]
            np.meshgrid(*(self.coordinates(i) for i in range(3)), indexing="ij")
        )

    @property
    def weight(self) -> float:
        """Quadrature weight of one grid point"""
        return float(np.prod([self.spacing(i) for i in self.active_axes]))

    @property
    def volume(self) -> float:
        return float(np.prod([self.axes[i].points * self.spacing(i) for i in self.active_axes]))

    @cached_property
    def free_mask(self) -> np.ndarray:
        """False on pinned hard-wall boundary points"""
        mask = np.ones(self.shape, dtype=bool)
        if self.periodic:
            return mask
        for i in self.active_axes:
            edge = [slice(None)] * 3
            edge[i] = [0, -1]  # type: ignore[call-overload]
            mask[tuple(edge)] = False
        return mask

    @cached_property
    def free_indices(self) -> np.ndarray:
        return np.flatnonzero(self.free_mask.ravel())

    def check_field(self, field: np.ndarray, name: str = "field") -> None:
        if field.shape[-3:] != self.shape:
            raise ShapeError(
                "Field sampled on a different grid",
                details={"field": name, "shape": list(field.shape), "grid": list(self.shape)},
            )

    def restrict(self, field: np.ndarray) -> np.ndarray:
        """Field(s) of shape (..., nx, ny, nz) -> free-point vectors (..., n_free)"""
        self.check_field(field)
        flat = field.reshape(field.shape[:-3] + (self.size,))
        return flat[..., self.free_indices]

    def embed(self, vectors: np.ndarray) -> np.ndarray:
        """Free-point vectors (..., n_free) -> fields (..., nx, ny, nz), zero on pinned points"""
        flat = np.zeros(vectors.shape[:-1] + (self.size,), dtype=vectors.dtype)
        flat[..., self.free_indices] = vectors
        return flat.reshape(vectors.shape[:-1] + self.shape)

    def integrate(self, field: np.ndarray) -> np.ndarray:
        """Rectangle-rule integral over the last three axes"""
        self.check_field(field)
        return np.sum(field, axis=(-3, -2, -1)) * self.weight

    def inner(self, a: np.ndarray, b: np.ndarray) -> complex:
        """<a|b>"""
        return complex(self.integrate(np.conj(a) * b))

    def norm(self, field: np.ndarray) -> float:
        return float(np.sqrt(self.integrate(np.abs(field) ** 2)))

    def derivative(self, field: np.ndarray, index: int, scheme: Scheme = "forward") -> np.ndarray:
        """Finite-difference derivative along spatial axis `index` of field(s) (..., nx, ny, nz)"""
        self.check_field(field)
        axis = index - 3
        h = self.spacing(index)
        if self.periodic:
            if scheme == "forward":
                return (np.roll(field, -1, axis=axis) - field) / h
            return (np.roll(field, -1, axis=axis) - np.roll(field, 1, axis=axis)) / (2 * h)
        # zero beyond the walls
        ahead = np.diff(field, axis=axis, append=0)
        if scheme == "forward":
            return ahead / h
        behind = np.diff(field, axis=axis, prepend=0)
        return (ahead + behind) / (2 * h)

    def gradient(self, field: np.ndarray, scheme: Scheme = "forward") -> np.ndarray:
        """Stacked derivatives along the active axes, shape (n_active, ...)"""
        return np.stack([self.derivative(field, i, scheme) for i in self.active_axes])

    def _difference_matrix(self, index: int) -> sp.csr_matrix:
        n = self.axes[index].points
        h = self.spacing(index)
        forward = sp.diags([-np.ones(n), np.ones(n - 1)], [0, 1], shape=(n, n), format="lil")
        if self.periodic:
            forward[n - 1, 0] = 1.0
        return (forward.tocsr() / h).tocsr()

    @cached_property
    def kinetic(self) -> sp.csr_matrix:
        """
        -1/2 Laplacian on free points as 1/2 sum_mu D_mu^T D_mu.

        w * v^H T v equals the forward-difference kinetic integral of the embedded field.
        """
        total = sp.csr_matrix((self.size, self.size))
        for index in self.active_axes:
            factors = [sp.identity(axis.points, format="csr") for axis in self.axes]
            factors[index] = self._difference_matrix(index)
            d_mu = sp.kron(sp.kron(factors[0], factors[1]), factors[2], format="csr")
            total = total + 0.5 * (d_mu.T @ d_mu)
        free = self.free_indices
        return total.tocsr()[free][:, free].tocsr()

"""Hyperplane math for anchor-pair splits.

A split plane is {x : w.x - b = 0} with w = p2 - p1. With b = b0 it is the
perpendicular bisector of the anchors; a fine-tune scalar delta_d shifts it by
delta_d along w/|w|. Everything here accumulates in float64.
"""
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import DegeneratePlaneError, DimensionMismatchError


class Side(Enum):
    LEFT = "left"
    RIGHT = "right"


@dataclass(frozen=True, eq=False)
class Hyperplane:
    w: np.ndarray
    b: float

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.w))

    @classmethod
    def from_anchors(cls, p1, p2, delta_d: float = 0.0) -> "Hyperplane":
        """Plane of the anchor pair, shifted by delta_d (0 gives the bisector)."""
        w = normal_vector(p1, p2)
        b0 = base_offset(p1, p2)
        if delta_d == 0.0:
            return cls(w, b0)
        return cls(w, final_offset(b0, delta_d, _nonzero_norm(w)))


def _as64(v) -> np.ndarray:
    return np.asarray(v, dtype=np.float64)


def _same_dim(a, b):
    if a.shape != b.shape:
        raise DimensionMismatchError(f"dimension mismatch: {a.shape} vs {b.shape}")


def _nonzero_norm(w) -> float:
    norm = float(np.linalg.norm(w))
    if norm == 0.0:
        raise DegeneratePlaneError("hyperplane normal has zero norm (identical anchors)")
    return norm


def normal_vector(p1, p2) -> np.ndarray:
    """w = p2 - p1. A zero result means the anchors coincide."""
    p1, p2 = _as64(p1), _as64(p2)
    _same_dim(p1, p2)
    return p2 - p1


def base_offset(p1, p2) -> float:
    """b0 = (|p2|^2 - |p1|^2) / 2, the bisector offset."""
    p1, p2 = _as64(p1), _as64(p2)
    _same_dim(p1, p2)
    return float((p2 @ p2 - p1 @ p1) / 2.0)


def final_offset(b0: float, delta_d: float, w_norm: float) -> float:
    """Offset of the bisector shifted by delta_d along the unit normal."""
    return float(b0) + float(delta_d) * float(w_norm)


def signed_distance(x, plane: Hyperplane) -> float:
    x = _as64(x)
    w = _as64(plane.w)
    _same_dim(x, w)
    return float((w @ x - plane.b) / _nonzero_norm(w))


def side_of(x, plane: Hyperplane) -> Side:
    """LEFT iff w.x - b <= 0 (points on the plane go left)."""
    x = _as64(x)
    w = _as64(plane.w)
    _same_dim(x, w)
    _nonzero_norm(w)
    return Side.LEFT if w @ x - plane.b <= 0 else Side.RIGHT


def signed_distances(X, plane: Hyperplane) -> np.ndarray:
    """Row-wise signed_distance for a float64 matrix X."""
    w = _as64(plane.w)
    return (_as64(X) @ w - plane.b) / _nonzero_norm(w)


def left_mask(X, plane: Hyperplane) -> np.ndarray:
    """Row-wise side_of as a boolean mask (True = LEFT)."""
    w = _as64(plane.w)
    _nonzero_norm(w)
    return _as64(X) @ w - plane.b <= 0

"""Rotation sampling and energy-sphere geometry."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateStateError, InvalidDimensionError, InvalidParameterError
from .rng import as_generator


@dataclass(frozen=True)
class EnergySphereSpec:
    """The constraint surface ``sum_k |p_k|^2 = total_energy`` in R^(N*d)."""

    n_particles: int
    dim: int
    total_energy: float

    def __post_init__(self):
        if self.n_particles < 1:
            raise InvalidParameterError("n_particles must be >= 1")
        if self.dim < 1:
            raise InvalidDimensionError("dim must be >= 1")
        if not self.total_energy > 0:
            raise InvalidParameterError("total_energy must be positive")

    @property
    def size(self) -> int:
        return self.n_particles * self.dim

    def contains(self, p, rtol: float = 1e-10) -> bool:
        p = np.asarray(p, dtype=float)
        if p.shape != (self.size,):
            return False
        return abs(float(p @ p) - self.total_energy) <= rtol * self.total_energy

    def speeds(self, p) -> np.ndarray:
        p = np.asarray(p, dtype=float)
        return np.linalg.norm(p.reshape(*p.shape[:-1], self.n_particles, self.dim), axis=-1)


def haar_rotations(d: int, n: int, rng) -> np.ndarray:
    """Draw ``n`` independent Haar-distributed elements of SO(d), shape (n, d, d).

    QR of a Gaussian matrix, with the columns of Q re-signed so that R has a
    positive diagonal (this makes Q Haar on O(d)). Improper samples get their
    first column negated; right multiplication by a fixed reflection preserves
    Haar measure, so the result is Haar on SO(d).
    """
    if d < 2:
        raise InvalidDimensionError(f"rotations need d >= 2, got d={d}")
    gen = as_generator(rng)
    z = gen.standard_normal((n, d, d))
    q, r = np.linalg.qr(z)
    signs = np.sign(np.diagonal(r, axis1=-2, axis2=-1))
    signs[signs == 0] = 1.0
    q = q * signs[:, None, :]
    improper = np.linalg.det(q) < 0
    q[improper, :, 0] *= -1.0
    return q


def sample_haar_rotation(d: int, rng) -> np.ndarray:
    return haar_rotations(d, 1, rng)[0]


def unit_directions(d: int, n: int, rng) -> np.ndarray:
    if d < 1:
        raise InvalidDimensionError(f"d must be >= 1, got {d}")
    gen = as_generator(rng)
    while True:
        x = gen.standard_normal((n, d))
        norms = np.linalg.norm(x, axis=1)
        if np.all(norms > 0):
            return x / norms[:, None]


def sample_unit_direction(d: int, rng) -> np.ndarray:
    return unit_directions(d, 1, rng)[0]


def project_to_sphere(x, U: float) -> np.ndarray:
    """Radially rescale ``x`` so that ``|x|^2 == U``."""
    x = np.asarray(x, dtype=float)
    sq = float(x @ x)
    if not sq > 0:
        raise DegenerateStateError("cannot project the zero vector onto the energy sphere")
    if sq == U:
        return x.copy()
    return x * np.sqrt(U / sq)


def rotation_taking(a, b) -> np.ndarray:
    """A rotation R in SO(d) with ``R @ a == b`` for unit vectors a, b (d >= 2).

    Product of two Householder reflections: a -> -a, then -a -> b.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    d = a.size
    if d < 2:
        raise InvalidDimensionError("rotation_taking needs d >= 2")
    eye = np.eye(d)
    # H1 reflects across the hyperplane orthogonal to a, so H1 a = -a.
    h1 = eye - 2.0 * np.outer(a, a)
    # H2 sends -a to b: reflection across the hyperplane orthogonal to a + b.
    w = b + a
    nw = np.linalg.norm(w)
    if nw < 1e-12:
        # b = -a: H1 alone maps a to b; compose with a reflection fixing a and b.
        e = eye[np.argmin(np.abs(a))]
        e = e - (e @ a) * a
        e /= np.linalg.norm(e)
        return (eye - 2.0 * np.outer(e, e)) @ h1
    w = w / nw
    h2 = eye - 2.0 * np.outer(w, w)
    return h2 @ h1

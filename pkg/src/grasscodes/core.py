"""Geometry of the real Grassmannian G(k, n) under the chordal metric.

A k-plane is stored through a generator matrix: k orthonormal rows in R^n.
Generator matrices are not unique, so two planes are compared through
their chordal distance, never through their matrices.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionError, DimensionMismatch, RankDeficient

ORTHONORMAL_TOL = 1e-12
RANK_TOL = 1e-10
SAME_PLANE_TOL = 1e-8


def embedding_radius(k: int, n: int) -> float:
    """Radius sqrt(k(n-k)/n) of the sphere that receives the embedded planes."""
    return float(np.sqrt(k * (n - k) / n))


def _check_kn(k: int, n: int, allow_large_k: bool) -> None:
    if n < 1 or k < 1:
        raise DimensionError(f"need k >= 1 and n >= 1, got k={k}, n={n}")
    if k > n:
        raise DimensionError(f"plane dimension k={k} exceeds ambient n={n}")
    if not allow_large_k and 2 * k >= n:
        raise DimensionError(
            f"k={k} must satisfy k < n/2 (n={n}); pass allow_large_k=True to override"
        )


@dataclass(frozen=True, eq=False)
class Subspace:
    """A k-plane in R^n given by a k x n generator matrix with orthonormal rows.

    Build instances with :func:`orthonormalize` (or ``Subspace.from_rows``)
    unless the rows are already known to be orthonormal.
    """

    basis: np.ndarray
    allow_large_k: bool = field(default=False, repr=False)

    def __post_init__(self):
        basis = np.array(self.basis, dtype=float, copy=True)
        if basis.ndim != 2:
            raise DimensionError("generator matrix must be two-dimensional")
        k, n = basis.shape
        _check_kn(k, n, self.allow_large_k)
        gram = basis @ basis.T
        if np.max(np.abs(gram - np.eye(k))) > ORTHONORMAL_TOL:
            # Canonicalize: accept nearly orthonormal rows and clean them up.
            basis = _orthonormal_rows(basis)
        basis.setflags(write=False)
        object.__setattr__(self, "basis", basis)

    @classmethod
    def from_rows(cls, rows, allow_large_k: bool = False) -> "Subspace":
        return orthonormalize(rows, allow_large_k=allow_large_k)

    @property
    def k(self) -> int:
        return self.basis.shape[0]

    @property
    def n(self) -> int:
        return self.basis.shape[1]

    def same_plane(self, other: "Subspace", tol: float = SAME_PLANE_TOL) -> bool:
        return chordal_distance(self, other) < tol

    def to_text(self) -> str:
        buf = io.StringIO()
        write_subspace(self, buf)
        return buf.getvalue()

    @classmethod
    def from_text(cls, text: str, allow_large_k: bool = False) -> "Subspace":
        return read_subspace(io.StringIO(text), allow_large_k=allow_large_k)


@dataclass(frozen=True)
class PrincipalAngles:
    """Principal angles in radians, sorted so that theta[0] >= ... >= theta[k-1]."""

    theta: np.ndarray

    def __post_init__(self):
        theta = np.array(self.theta, dtype=float, copy=True).reshape(-1)
        if np.any(theta < 0) or np.any(theta > np.pi / 2):
            raise ValueError("principal angles must lie in [0, pi/2]")
        if np.any(np.diff(theta) > 0):
            raise ValueError("principal angles must be sorted non-increasing")
        theta.setflags(write=False)
        object.__setattr__(self, "theta", theta)

    def __len__(self):
        return len(self.theta)

    @property
    def sines(self) -> np.ndarray:
        return np.sin(self.theta)

    def chordal(self) -> float:
        return float(np.linalg.norm(self.sines))


@dataclass(frozen=True)
class EmbeddedPoint:
    """Traceless part Pi_p - (k/n) I of a projection matrix."""

    matrix: np.ndarray

    def __post_init__(self):
        m = np.array(self.matrix, dtype=float, copy=True)
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.matrix))

    def coordinates(self) -> np.ndarray:
        """Isometric coordinates in R^{(n-1)(n+2)/2}.

        Off-diagonal entries of the upper triangle are scaled by sqrt(2).
        The zero-trace diagonal is expanded in a Helmert basis, which drops
        one redundant coordinate without changing the Euclidean norm.
        """
        n = self.matrix.shape[0]
        diag = np.diag(self.matrix)
        j = np.arange(1, n)
        diag_coords = (np.cumsum(diag)[:-1] - j * diag[1:]) / np.sqrt(j * (j + 1))
        iu = np.triu_indices(n, k=1)
        return np.concatenate([diag_coords, np.sqrt(2.0) * self.matrix[iu]])

    def full_coordinates(self) -> np.ndarray:
        """Length n(n+1)/2 vector: raw diagonal, then sqrt(2)-scaled upper triangle."""
        n = self.matrix.shape[0]
        iu = np.triu_indices(n, k=1)
        return np.concatenate([np.diag(self.matrix), np.sqrt(2.0) * self.matrix[iu]])


def _orthonormal_rows(rows: np.ndarray) -> np.ndarray:
    q, _ = np.linalg.qr(rows.T)
    return np.ascontiguousarray(q.T)


def orthonormalize(rows, allow_large_k: bool = False) -> Subspace:
    """Return the plane spanned by the rows of a k x n matrix.

    Raises RankDeficient when the smallest singular value falls below
    1e-10 times the largest.
    """
    rows = np.atleast_2d(np.asarray(rows, dtype=float))
    k, n = rows.shape
    if k > n:
        raise DimensionError(f"{k} rows cannot be independent in R^{n}")
    s = np.linalg.svd(rows, compute_uv=False)
    if s[0] == 0 or s[-1] <= RANK_TOL * s[0]:
        raise RankDeficient(f"rows have numerical rank < {k}")
    return Subspace(_orthonormal_rows(rows), allow_large_k=allow_large_k)


def _check_compatible(p: Subspace, q: Subspace) -> None:
    if p.n != q.n or p.k != q.k:
        raise DimensionMismatch(f"G({p.k},{p.n}) vs G({q.k},{q.n})")


def principal_angles(p: Subspace, q: Subspace) -> PrincipalAngles:
    _check_compatible(p, q)
    cosines = np.clip(np.linalg.svd(p.basis @ q.basis.T, compute_uv=False), 0.0, 1.0)
    # arccos loses about half the digits near 0; the residual of p after
    # projecting onto q carries the sines at full precision.
    sines = np.clip(np.linalg.svd(_residual(p, q), compute_uv=False)[: p.k], 0.0, 1.0)
    # sines come out decreasing, cosines decreasing -> pair sines with reversed cosines
    theta = np.arctan2(sines, cosines[::-1])
    return PrincipalAngles(np.clip(theta, 0.0, np.pi / 2))


def _residual(p: Subspace, q: Subspace) -> np.ndarray:
    return p.basis - (p.basis @ q.basis.T) @ q.basis


def chordal_distance(p: Subspace, q: Subspace) -> float:
    """||sin theta||, the Frobenius norm of A_p (I - Pi_q)."""
    _check_compatible(p, q)
    return float(np.linalg.norm(_residual(p, q)))


def projection_matrix(p: Subspace) -> np.ndarray:
    return p.basis.T @ p.basis


def embed(p: Subspace) -> EmbeddedPoint:
    return EmbeddedPoint(projection_matrix(p) - (p.k / p.n) * np.eye(p.n))


def pairwise_sq_distances(bases: np.ndarray) -> np.ndarray:
    """Squared chordal distances between all planes in a (M, k, n) stack."""
    k = bases.shape[1]
    overlaps = np.einsum("aki,bli->abkl", bases, bases)
    d2 = k - np.sum(overlaps**2, axis=(2, 3))
    np.fill_diagonal(d2, 0.0)
    return np.maximum(d2, 0.0)


def write_subspace(p: Subspace, fh) -> None:
    fh.write(f"{p.k} {p.n}\n")
    for row in p.basis:
        fh.write(" ".join(repr(float(x)) for x in row) + "\n")


def _next_line(fh) -> str:
    for line in fh:
        line = line.strip()
        if line:
            return line
    raise ValueError("unexpected end of input")


def read_subspace(fh, allow_large_k: bool = False) -> Subspace:
    k, n = (int(t) for t in _next_line(fh).split())
    rows = [[float(t) for t in _next_line(fh).split()] for _ in range(k)]
    if any(len(row) != n for row in rows):
        raise DimensionError(f"expected {k} rows of {n} entries")
    rows = np.array(rows)
    if np.max(np.abs(rows @ rows.T - np.eye(k))) <= ORTHONORMAL_TOL:
        # keep the stored digits so write -> read is exact
        return Subspace(rows, allow_large_k=allow_large_k)
    return orthonormalize(rows, allow_large_k=allow_large_k)

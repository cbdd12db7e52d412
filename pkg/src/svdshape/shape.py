"""Landmark figures to SVD shape coordinates.

A figure of N landmarks in K dimensions is an N x K matrix X.  The
pipeline removes nuisance structure in stages:

1. whitening by a K x K SPD matrix Theta:  Z = X Theta^{-1/2},
2. translation removal by a Helmert submatrix L:  Y = L Z,
3. SVD factorization  Y = V' diag(D) H  with semi-orthogonal V, H,
4. scale removal  W = D / r  with  r = ||D||_2 = ||Y||_F,
5. hyperspherical shape angles u with W(u) on the unit sphere octant
   respecting the singular-value ordering.

W (equivalently u) is invariant under translation, rotation and positive
scaling of the original figure.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import (
    ContractViolationError,
    DecompositionError,
    DegenerateFigureError,
    InvalidDimensionError,
)

__all__ = [
    "LandmarkMatrix",
    "WhitenConfig",
    "ShapeDecomposition",
    "ShapeSample",
    "helmert_submatrix",
    "whiten",
    "svd_shape",
    "shape_from_centered",
    "angles_from_w",
    "w_from_angles",
    "jacobian_j",
    "angles_in_region",
]

# Singular-value gaps below NEAR_TIE_REL * r are flagged as near-ties:
# W stays well defined but V, H lose uniqueness.
NEAR_TIE_REL = 1e-6


@dataclass(frozen=True)
class LandmarkMatrix:
    """One figure: N landmarks in K dimensions, all entries finite."""

    data: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.data, dtype=float)
        if arr.ndim != 2:
            raise InvalidDimensionError("landmark matrix must be 2-dimensional")
        N, K = arr.shape
        if N < 3 or K < 2:
            raise InvalidDimensionError(
                f"need at least 3 landmarks in at least 2 dimensions, got {N}x{K}"
            )
        if not np.all(np.isfinite(arr)):
            raise ContractViolationError("landmark matrix has non-finite entries")
        object.__setattr__(self, "data", arr)

    @property
    def n_landmarks(self) -> int:
        return self.data.shape[0]

    @property
    def n_dims(self) -> int:
        return self.data.shape[1]


@dataclass(frozen=True)
class WhitenConfig:
    """Whitening matrix Theta (K x K, symmetric positive definite).

    ``theta=None`` means the identity, i.e. no whitening.
    """

    theta: np.ndarray | None = None

    def root_inverse(self, K: int) -> np.ndarray:
        """Theta^{-1/2}, the inverse of the unique SPD square root."""
        if self.theta is None:
            return np.eye(K)
        theta = np.asarray(self.theta, dtype=float)
        if theta.shape != (K, K):
            raise InvalidDimensionError(
                f"theta must be {K}x{K}, got {theta.shape}"
            )
        if not np.allclose(theta, theta.T, rtol=0, atol=1e-10 * max(1.0, np.abs(theta).max())):
            raise DecompositionError("theta is not symmetric")
        evals, evecs = np.linalg.eigh(0.5 * (theta + theta.T))
        if evals[0] <= 0:
            raise DecompositionError(
                f"theta is not positive definite: smallest eigenvalue {evals[0]:.3e}"
            )
        return (evecs / np.sqrt(evals)) @ evecs.T


def helmert_submatrix(N: int) -> np.ndarray:
    """The (N-1) x N Helmert submatrix: orthonormal rows, all orthogonal
    to the ones vector.  Row i (1-based) is (1,...,1,-i,0,...,0)/sqrt(i(i+1)).
    """
    if N < 2:
        raise InvalidDimensionError(f"Helmert submatrix needs N >= 2, got {N}")
    L = np.zeros((N - 1, N))
    for i in range(1, N):
        L[i - 1, :i] = 1.0
        L[i - 1, i] = -i
        L[i - 1] /= np.sqrt(i * (i + 1.0))
    return L


def whiten(X: LandmarkMatrix | np.ndarray, cfg: WhitenConfig = WhitenConfig()) -> np.ndarray:
    """Z = X Theta^{-1/2} using the symmetric positive definite root."""
    data = X.data if isinstance(X, LandmarkMatrix) else np.asarray(X, dtype=float)
    return data @ cfg.root_inverse(data.shape[1])


@dataclass(frozen=True)
class ShapeDecomposition:
    """SVD shape coordinates of one centered, whitened figure Y.

    Y = V' diag(D) H = r V' diag(W) H with n = min(N-1, K) singular
    values, r = ||Y||_F, unit vector W, and m = n-1 shape angles u.
    V and H are None for decompositions re-read from a shapes file,
    which keeps only the rotation-invariant coordinates.
    """

    D: np.ndarray
    r: float
    W: np.ndarray
    u: np.ndarray
    dims: tuple  # (N, K)
    flags: dict = field(default_factory=dict)
    V: np.ndarray | None = None
    H: np.ndarray | None = None

    @property
    def n(self) -> int:
        return len(self.D)

    @property
    def near_tie(self) -> bool:
        return bool(self.flags.get("near_tie", False))


def _canonicalize_svd(U: np.ndarray, s: np.ndarray, Vt: np.ndarray):
    """Fix the SVD sign ambiguity: in each right-singular row, the first
    entry of largest magnitude is made positive; the paired left column
    flips with it.  numpy already orders singular values descending.
    """
    for i in range(Vt.shape[0]):
        row = Vt[i]
        j = int(np.argmax(np.abs(row)))
        if row[j] < 0:
            Vt[i] = -row
            U[:, i] = -U[:, i]
    return U, s, Vt


def shape_from_centered(Y: np.ndarray, dims: tuple) -> ShapeDecomposition:
    """Shape decomposition of an already centered (and whitened) figure
    Y: (N-1) x K.  Used directly on simulated figures.
    """
    Y = np.asarray(Y, dtype=float)
    N, K = dims
    if Y.shape != (N - 1, K):
        raise InvalidDimensionError(f"expected {(N - 1, K)} centered figure, got {Y.shape}")
    r = float(np.linalg.norm(Y))
    if r == 0.0:
        raise DegenerateFigureError("all landmarks coincide: zero centered figure")
    n = min(N - 1, K)
    U, s, Vt = np.linalg.svd(Y, full_matrices=False)
    U, s, Vt = _canonicalize_svd(U, s, Vt)
    V = U[:, :n].T
    H = Vt[:n, :]
    D = s[:n].copy()
    W = D / r
    u = angles_from_w(W)
    flags = {}
    gaps = np.diff(D)
    if n > 1 and (np.min(-gaps) < NEAR_TIE_REL * r or D[-1] < NEAR_TIE_REL * r):
        flags["near_tie"] = True
    recon = V.T @ np.diag(D) @ H
    resid = np.linalg.norm(Y - recon) / r
    if resid > 1e-9:
        raise DecompositionError(f"SVD reconstruction residual {resid:.3e} exceeds 1e-9")
    return ShapeDecomposition(V=V, H=H, D=D, r=r, W=W, u=u, dims=(N, K), flags=flags)


def svd_shape(X: LandmarkMatrix | np.ndarray, cfg: WhitenConfig = WhitenConfig()) -> ShapeDecomposition:
    """Full pipeline: whiten, center with the Helmert submatrix, and
    factorize.  Deterministic thanks to sign/order canonicalization.
    """
    if not isinstance(X, LandmarkMatrix):
        X = LandmarkMatrix(X)
    N, K = X.n_landmarks, X.n_dims
    Z = whiten(X, cfg)
    Y = helmert_submatrix(N) @ Z
    return shape_from_centered(Y, (N, K))


@dataclass(frozen=True)
class ShapeSample:
    """A dataset of shape decompositions sharing one (N, K)."""

    shapes: tuple
    dims: tuple
    labels: tuple = ()
    ids: tuple = ()

    def __post_init__(self):
        for s in self.shapes:
            if s.dims != self.dims:
                raise ContractViolationError(
                    f"sample mixes dimensions {s.dims} and {self.dims}"
                )
        if self.labels and len(self.labels) != len(self.shapes):
            raise ContractViolationError("labels length differs from shapes")
        if self.ids and len(self.ids) != len(self.shapes):
            raise ContractViolationError("ids length differs from shapes")

    def __len__(self) -> int:
        return len(self.shapes)

    def subset(self, label) -> "ShapeSample":
        idx = [i for i, g in enumerate(self.labels) if g == label]
        return ShapeSample(
            shapes=tuple(self.shapes[i] for i in idx),
            dims=self.dims,
            labels=tuple(self.labels[i] for i in idx),
            ids=tuple(self.ids[i] for i in idx) if self.ids else (),
        )


# ---------------------------------------------------------------------------
# hyperspherical shape angles


def angles_from_w(W) -> np.ndarray:
    """Angles u = (theta_1, ..., theta_{n-1}) of a unit, non-increasing,
    nonnegative W:

        W_1 = cos(theta_1)
        W_i = cos(theta_i) prod_{j<i} sin(theta_j)     (1 < i < n)
        W_n = prod_{j<=n-1} sin(theta_j)

    Computed stably as theta_i = atan2(||W_{i+1:}||, W_i); the round trip
    through w_from_angles is exact to ~1e-15.
    """
    W = np.asarray(W, dtype=float)
    n = len(W)
    if abs(float(W @ W) - 1.0) > 1e-9:
        raise ContractViolationError(f"W must be unit norm, got ||W||^2 = {float(W @ W)!r}")
    if np.any(W < -1e-12):
        raise ContractViolationError("W must be nonnegative")
    if np.any(np.diff(W) > 1e-12):
        raise ContractViolationError("W must be non-increasing")
    u = np.empty(max(n - 1, 0))
    for i in range(n - 1):
        tail = float(np.linalg.norm(W[i + 1 :]))
        u[i] = np.arctan2(tail, W[i])
    return u


def w_from_angles(u, n: int | None = None) -> np.ndarray:
    """Inverse of angles_from_w: unit W on the ordered nonnegative octant."""
    u = np.asarray(u, dtype=float)
    m = len(u)
    if n is None:
        n = m + 1
    elif n != m + 1:
        raise ContractViolationError(f"{m} angles parameterize n = {m + 1}, not n = {n}")
    W = np.empty(n)
    prod = 1.0
    for i in range(m):
        W[i] = np.cos(u[i]) * prod
        prod *= np.sin(u[i])
    W[n - 1] = prod
    return W


def angles_in_region(u) -> bool:
    """True when the angles map to a valid ordered nonnegative unit W."""
    W = w_from_angles(u)
    return bool(np.all(W >= -1e-15) and np.all(np.diff(W) <= 1e-15))


def jacobian_j(u) -> float:
    """J(u) = prod_{i=1}^{m} sin^{m-i}(theta_i), the angular factor of
    the volume element; equals 1 for m <= 1.
    """
    u = np.asarray(u, dtype=float)
    m = len(u)
    v = 1.0
    for i in range(m):
        v *= np.sin(u[i]) ** (m - (i + 1))
    return float(v)

"""Shape densities for elliptical landmark models.

Two coordinate systems:

* cone density: joint density of the ordered singular values D of the
  centered, whitened figure (size-and-shape),
* disk density: density of the unit-scaled singular values W, expressed
  over the shape angles u (the angular volume factor J(u) is included, so
  integrating over the valid angle region gives 1).

Isotropic (Sigma = sigma^2 I) non-central densities are zonal-polynomial
series over integer partitions; with a Kotz generator the radial
integrals close in finite gamma sums.  Explicit Gaussian and Kotz T=2,3
disk formulas are implemented as an independent path and must agree with
the generic series pointwise.  Central densities admit a general
covariance Sigma; the central disk needs a Stiefel-manifold integral
which is closed-form for scalar Sigma and Monte-Carlo estimated
otherwise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    ContractViolationError,
    DomainError,
    EvaluationError,
    TruncationError,
)
from .generators import KotzParams, NoncentralityScalars, radial_integral
from . import generators as _gen
from .polyalg import (
    SeriesAccumulator,
    SeriesControl,
    enumerate_partitions,
    gen_pochhammer,
    monic_coefficient_block,
    monomial_values,
    zonal_at_identity,
)
from .shape import angles_in_region, jacobian_j, w_from_angles, shape_from_centered

__all__ = [
    "ShapeDims",
    "IsotropicModel",
    "CentralModel",
    "DensityValue",
    "McConfig",
    "cone_density_isotropic",
    "disk_density_isotropic",
    "disk_density_gaussian_explicit",
    "disk_density_kotz_explicit",
    "central_cone_density",
    "central_disk_density",
    "sample_isotropic_figure",
    "sample_shape_angles",
    "sample_stiefel",
    "stiefel_volume",
]


def _lmvgamma(a: float, n: int) -> float:
    """log of the multivariate gamma function Gamma_n(a)."""
    return 0.25 * n * (n - 1) * math.log(math.pi) + sum(
        math.lgamma(a - 0.5 * i) for i in range(n)
    )


@dataclass(frozen=True)
class ShapeDims:
    """Dimension bookkeeping for N landmarks in K coordinates."""

    N: int
    K: int

    def __post_init__(self):
        if self.N < 3 or self.K < 2:
            raise ContractViolationError(f"need N >= 3, K >= 2, got N={self.N}, K={self.K}")

    @property
    def n(self) -> int:
        return min(self.N - 1, self.K)

    @property
    def m(self) -> int:
        return self.n - 1

    @property
    def M(self) -> int:
        return self.K * (self.N - 1)

    @property
    def radial_power(self) -> int:
        """n(N + K - n - 1); equals M at n = min(N-1, K)."""
        return self.n * (self.N + self.K - self.n - 1)


@dataclass(frozen=True)
class IsotropicModel:
    """Isotropic elliptical model for the centered figure: mean mu
    ((N-1) x K, in whitened coordinates), covariance sigma^2 I, generator
    ``gen`` with ambient dimension M = K(N-1).
    """

    mu: np.ndarray
    sigma2: float
    gen: KotzParams
    N: int
    K: int

    def __post_init__(self):
        mu = np.asarray(self.mu, dtype=float)
        dims = ShapeDims(self.N, self.K)
        if mu.shape != (self.N - 1, self.K):
            raise ContractViolationError(
                f"mu must be {(self.N - 1, self.K)}, got {mu.shape}"
            )
        if not (self.sigma2 > 0):
            raise ContractViolationError(f"sigma2 must be positive, got {self.sigma2!r}")
        if self.gen.M != dims.M:
            raise ContractViolationError(
                f"generator dimension M={self.gen.M} does not match K(N-1)={dims.M}"
            )
        object.__setattr__(self, "mu", mu)

    @property
    def dims(self) -> ShapeDims:
        return ShapeDims(self.N, self.K)

    def noncentrality(self) -> NoncentralityScalars:
        """Omega = mu mu' / sigma^2 summarized by its nonzero spectrum."""
        s = np.linalg.svd(self.mu, compute_uv=False)
        eigs = tuple((s * s) / self.sigma2)
        return NoncentralityScalars(trace_omega=float(sum(eigs)), omega_eigenvalues=eigs)


@dataclass(frozen=True)
class CentralModel:
    """Central elliptical model with full (N-1) x (N-1) covariance Sigma."""

    sigma_full: np.ndarray
    gen: KotzParams
    N: int
    K: int

    def __post_init__(self):
        S = np.asarray(self.sigma_full, dtype=float)
        dims = ShapeDims(self.N, self.K)
        if S.shape != (self.N - 1, self.N - 1):
            raise ContractViolationError(
                f"sigma_full must be {(self.N - 1, self.N - 1)}, got {S.shape}"
            )
        if not np.allclose(S, S.T, rtol=0, atol=1e-10 * max(1.0, np.abs(S).max())):
            raise ContractViolationError("sigma_full must be symmetric")
        if np.linalg.eigvalsh(S)[0] <= 0:
            raise ContractViolationError("sigma_full must be positive definite")
        if self.gen.M != dims.M:
            raise ContractViolationError(
                f"generator dimension M={self.gen.M} does not match K(N-1)={dims.M}"
            )
        object.__setattr__(self, "sigma_full", S)

    @property
    def dims(self) -> ShapeDims:
        return ShapeDims(self.N, self.K)

    @property
    def scalar_sigma2(self) -> float | None:
        """sigma^2 when Sigma is (numerically) a scalar matrix, else None."""
        S = self.sigma_full
        s2 = float(S[0, 0])
        if np.allclose(S, s2 * np.eye(S.shape[0]), rtol=1e-12, atol=1e-14 * max(1.0, abs(s2))):
            return s2
        return None


@dataclass(frozen=True)
class DensityValue:
    """A density evaluation: the value, the series degree actually used,
    a tail estimate in density units, and the Monte-Carlo standard error
    when a Stiefel integral was estimated stochastically.
    """

    value: float
    truncation_degree_used: int
    tail_estimate: float
    mc_stderr: float | None = None


@dataclass(frozen=True)
class McConfig:
    """Monte-Carlo budget for Stiefel integrals."""

    samples: int = 200_000
    seed: int = 0
    workers: int = 1
    batch: int = 50_000

    def __post_init__(self):
        if self.samples < 1:
            raise ContractViolationError("samples must be >= 1")
        if self.workers < 1:
            raise ContractViolationError("workers must be >= 1")


# ---------------------------------------------------------------------------
# partition bookkeeping shared by the series evaluators


class _SeriesBasis:
    """Flattened partition tables for degree-major series with at most
    ``max_parts`` parts: per-degree slices, (K/2)_kappa, C_kappa(I_{N-1}),
    and dense per-degree monomial-coefficient blocks so that a full
    zonal-value vector is a handful of small matvecs.
    """

    def __init__(self, N: int, K: int, max_degree: int, max_parts: int):
        self.N, self.K = N, K
        self.max_degree = max_degree
        self.max_parts = max_parts
        kappas = []
        slices = []
        blocks = []
        parts_by_degree = []
        start = 0
        for f in range(max_degree + 1):
            fam, block = monic_coefficient_block(f, max_parts)
            kappas.extend(fam)
            parts_by_degree.append(fam)
            blocks.append(block)
            slices.append(slice(start, start + len(fam)))
            start += len(fam)
        self.kappas = kappas
        self.parts_by_degree = parts_by_degree
        self.blocks = blocks
        self.slices = slices
        self.size = start
        self.poch_half_k = np.array([gen_pochhammer(K / 2.0, k) for k in kappas])
        self.c_identity = np.array([zonal_at_identity(k, N - 1) for k in kappas])
        # one block-diagonal matrix over the whole flat basis, plus
        # exponent vectors for a vectorized two-part monomial fast path
        self.coef = np.zeros((self.size, self.size))
        for f in range(max_degree + 1):
            sl = slices[f]
            self.coef[sl, sl] = blocks[f]
        if max_parts <= 2:
            self._exp_a = np.array([k[0] if k else 0 for k in kappas])
            self._exp_b = np.array([k[1] if len(k) > 1 else 0 for k in kappas])
        else:
            self._exp_a = None

    def _monomials(self, eigenvalues) -> np.ndarray:
        xs = [float(x) for x in eigenvalues if x != 0.0]
        if self._exp_a is not None and len(xs) <= 2:
            x = xs[0] if len(xs) >= 1 else 0.0
            y = xs[1] if len(xs) >= 2 else 0.0
            px = np.power(x, np.arange(self.max_degree + 1))
            py = np.power(y, np.arange(self.max_degree + 1))
            a, b = self._exp_a, self._exp_b
            mv = px[a] * py[b]
            off = a != b
            if len(xs) == 2:
                mv = mv + np.where(off, px[b] * py[a], 0.0)
            else:
                mv = np.where(b > 0, 0.0, mv)
            return mv
        return np.array(monomial_values(eigenvalues, self.kappas))

    def zonal_vector(self, eigenvalues, max_degree: int | None = None) -> np.ndarray:
        """C_kappa at the given spectrum for every basis partition (zeros
        beyond ``max_degree`` when a cap is given)."""
        mv = self._monomials(eigenvalues)
        if max_degree is not None and max_degree < self.max_degree:
            mv[self.slices[max_degree + 1].start :] = 0.0
        return self.coef @ mv


_BASIS_CACHE: dict = {}


def _series_basis(N: int, K: int, max_degree: int, max_parts: int) -> _SeriesBasis:
    key = (N, K, max_degree, max_parts)
    basis = _BASIS_CACHE.get(key)
    if basis is None:
        basis = _SeriesBasis(N, K, max_degree, max_parts)
        _BASIS_CACHE[key] = basis
    return basis


def _disk_basis(dims: ShapeDims, max_degree: int) -> _SeriesBasis:
    return _series_basis(dims.N, dims.K, max_degree, dims.n)


# ---------------------------------------------------------------------------
# geometric prefactors


def _geom_cone(D: np.ndarray, dims: ShapeDims) -> float:
    """prod D_i^{N-1+K-2n} prod_{i<j} (D_i^2 - D_j^2)."""
    e = dims.N - 1 + dims.K - 2 * dims.n
    v = float(np.prod(D**e))
    for i in range(dims.n):
        for j in range(i + 1, dims.n):
            v *= D[i] ** 2 - D[j] ** 2
    return v


def _check_angles(u, dims: ShapeDims) -> np.ndarray:
    u = np.asarray(u, dtype=float)
    if u.shape != (dims.m,):
        raise ContractViolationError(
            f"expected {dims.m} shape angles for n={dims.n}, got shape {u.shape}"
        )
    if not angles_in_region(u):
        raise ContractViolationError(f"angles {u!r} outside the ordered-W region")
    return u


def _check_cone_d(D, dims: ShapeDims) -> np.ndarray:
    D = np.asarray(D, dtype=float)
    if D.shape != (dims.n,):
        raise ContractViolationError(f"expected {dims.n} singular values, got {D.shape}")
    if np.any(D < 0) or np.any(np.diff(D) > 1e-15):
        raise ContractViolationError("singular values must be non-increasing and >= 0")
    return D


# ---------------------------------------------------------------------------
# per-family series plans for the disk density


@dataclass(frozen=True)
class _DiskPlan:
    """One disk-density evaluation strategy: a parameter-dependent log
    constant, the eigenvalues fed to the partition argument C_kappa, the
    eigenvalues fed to the shape argument, and per-degree weights.
    """

    log_const: float
    arg_eigenvalues: tuple
    w_transform: float  # W^2 eigenvalues are scaled by this factor
    weights: np.ndarray


def _gamma_ladder(p0: float, tmax: int, offset: int = 0) -> np.ndarray:
    """Gamma(p0 + t + offset) for t = 0..tmax, built by stable recursion."""
    out = np.empty(tmax + 1)
    g = math.exp(math.lgamma(p0 + offset))
    for t in range(tmax + 1):
        out[t] = g
        g *= p0 + offset + t
    return out


def _factorials(tmax: int) -> np.ndarray:
    out = np.empty(tmax + 1)
    v = 1.0
    for t in range(tmax + 1):
        out[t] = v
        v *= t + 1
    return out


def _explicit_const(dims: ShapeDims, sigma2: float, family: str) -> float:
    """log of the family constant of the explicit disk formulas, written
    with the dimension exponents kept in raw form."""
    N, K, n, M = dims.N, dims.K, dims.n, dims.M
    e2_gauss = 0.5 * (-2 - M + n + K * n - n * n + n * N)
    epi = -0.5 * (M + n - K * n - n * N)
    esig = -(M - n * (-1 + K - n + N))
    base = (
        epi * math.log(math.pi)
        + 0.5 * esig * math.log(sigma2)
        - _lmvgamma(K / 2.0, n)
        - _lmvgamma((N - 1) / 2.0, n)
    )
    if family == "gaussian":
        return base + e2_gauss * math.log(2.0)
    if family == "kotz_t2":
        return base + (e2_gauss + 1.0) * math.log(2.0) - math.log(M)
    if family == "kotz_t3":
        return base + e2_gauss * math.log(2.0) - math.log(M) - math.log(M + 2.0)
    raise ContractViolationError(f"unknown explicit family {family!r}")


def _disk_plan(model: IsotropicModel, family: str, tmax: int) -> _DiskPlan:
    dims = model.dims
    nc = model.noncentrality()
    fact = _factorials(tmax)
    if family == "generic":
        log_const = (
            dims.n * math.log(2.0)
            + 0.5 * dims.n * (dims.N + dims.K - 1) * math.log(math.pi)
            - _lmvgamma(dims.K / 2.0, dims.n)
            - _lmvgamma((dims.N - 1) / 2.0, dims.n)
            - 0.5 * (dims.N - 1) * dims.K * math.log(model.sigma2)
        )
        weights = np.empty(tmax + 1)
        for t in range(tmax + 1):
            rad = radial_integral(
                t, dims.radial_power + 2 * t, nc.trace_omega, model.sigma2, model.gen
            )
            weights[t] = rad * model.sigma2 ** (-t) / fact[t]
        return _DiskPlan(
            log_const=log_const,
            arg_eigenvalues=nc.omega_eigenvalues,
            w_transform=1.0,
            weights=weights,
        )
    # explicit families: argument matrix is mu'mu / (2 sigma^2)
    tau = 0.5 * nc.trace_omega
    arg = tuple(0.5 * w for w in nc.omega_eigenvalues)
    p0 = 0.5 * dims.n * (-1 + dims.K - dims.n + dims.N)
    g0 = _gamma_ladder(p0, tmax)
    ts = np.arange(tmax + 1, dtype=float)
    if family == "gaussian":
        if not model.gen.is_gaussian:
            raise ContractViolationError("explicit Gaussian path requires the T=1, R=1/2 generator")
        bracket = g0
    elif family == "kotz_t2":
        if not (model.gen.T == 2 and model.gen.R == 0.5):
            raise ContractViolationError("explicit Kotz T=2 path requires T=2, R=1/2")
        g1 = _gamma_ladder(p0, tmax, offset=1)
        bracket = (tau - 2.0 * ts) * g0 + g1
    elif family == "kotz_t3":
        if not (model.gen.T == 3 and model.gen.R == 0.5):
            raise ContractViolationError("explicit Kotz T=3 path requires T=3, R=1/2")
        g1 = _gamma_ladder(p0, tmax, offset=1)
        g2 = _gamma_ladder(p0, tmax, offset=2)
        # derivative bracket of y^2 e^{-y/2} integrated radially; the
        # Gamma(p0+t) group carries the full quadratic polynomial in t, tau
        bracket = (
            (4.0 * tau * tau - 16.0 * ts * tau + 16.0 * ts * ts - 8.0 * ts) * g0
            + (8.0 * tau - 16.0 * ts) * g1
            + 4.0 * g2
        )
    else:
        raise ContractViolationError(f"unknown disk family {family!r}")
    return _DiskPlan(
        log_const=_explicit_const(model.dims, model.sigma2, family) - tau,
        arg_eigenvalues=arg,
        w_transform=1.0,
        weights=bracket / fact,
    )


def _eval_disk(u, model: IsotropicModel, ctl: SeriesControl, family: str) -> DensityValue:
    dims = model.dims
    u = _check_angles(u, dims)
    W = w_from_angles(u, dims.n)
    geom = _geom_cone(W, dims) * jacobian_j(u)
    if geom == 0.0:
        return DensityValue(0.0, 0, 0.0)
    basis = _disk_basis(dims, ctl.max_degree)
    plan = _disk_plan(model, family, ctl.max_degree)
    wsq = W * W
    if family == "generic":
        # series argument is W^2 / sigma^2; the per-degree sigma powers
        # are folded into the weights, so the vector uses W^2 directly
        pass
    wvec = basis.zonal_vector(tuple(wsq)) / (basis.poch_half_k * basis.c_identity)
    cvec = basis.zonal_vector(plan.arg_eigenvalues)
    pref = math.exp(plan.log_const) * geom
    acc = SeriesAccumulator(ctl)
    for t in range(ctl.max_degree + 1):
        sl = basis.slices[t]
        term = plan.weights[t] * float(wvec[sl] @ cvec[sl])
        if acc.add(t, term):
            break
    if not acc.converged:
        raise TruncationError(
            "disk density series did not converge",
            partial_value=pref * acc.total,
            tail_estimate=pref * max(acc._window, default=abs(pref * acc.total)),
            degree_used=acc.degree_used,
        )
    value = pref * acc.total
    if value < 0:
        raise EvaluationError(f"series produced a negative density ({value!r}) at u={u!r}")
    return DensityValue(value, acc.degree_used, pref * acc.tail_estimate)


def disk_density_isotropic(u, model: IsotropicModel, ctl: SeriesControl = SeriesControl()) -> DensityValue:
    """Non-central isotropic disk density over the shape angles, generic
    generator path (zonal series times closed radial integrals)."""
    return _eval_disk(u, model, ctl, "generic")


def disk_density_gaussian_explicit(u, model: IsotropicModel, ctl: SeriesControl = SeriesControl()) -> DensityValue:
    """Explicit Gaussian disk density (independent of the generic path)."""
    return _eval_disk(u, model, ctl, "gaussian")


def disk_density_kotz_explicit(u, model: IsotropicModel, ctl: SeriesControl = SeriesControl(), T: int = 2) -> DensityValue:
    """Explicit Kotz disk density for T in {2, 3} at rate 1/2."""
    if T not in (2, 3):
        raise ContractViolationError(f"explicit Kotz disk density supports T in {{2, 3}}, got {T}")
    return _eval_disk(u, model, ctl, f"kotz_t{T}")


# ---------------------------------------------------------------------------
# cone densities


def cone_density_isotropic(D, model: IsotropicModel, ctl: SeriesControl = SeriesControl()) -> DensityValue:
    """Non-central isotropic cone density of the ordered singular values."""
    dims = model.dims
    D = _check_cone_d(D, dims)
    geom = _geom_cone(D, dims)
    if geom == 0.0:
        return DensityValue(0.0, 0, 0.0)
    nc = model.noncentrality()
    log_const = (
        dims.n * math.log(2.0)
        + 0.5 * dims.n * (dims.N - 1 + dims.K) * math.log(math.pi)
        - _lmvgamma(dims.K / 2.0, dims.n)
        - _lmvgamma((dims.N - 1) / 2.0, dims.n)
        - 0.5 * (dims.N - 1) * dims.K * math.log(model.sigma2)
    )
    basis = _disk_basis(dims, ctl.max_degree)
    dvec = basis.zonal_vector(tuple(D * D / model.sigma2)) / (
        basis.poch_half_k * basis.c_identity
    )
    cvec = basis.zonal_vector(nc.omega_eigenvalues)
    y = nc.trace_omega + float(D @ D) / model.sigma2
    fact = _factorials(ctl.max_degree)
    pref = math.exp(log_const) * geom
    acc = SeriesAccumulator(ctl)
    for t in range(ctl.max_degree + 1):
        sl = basis.slices[t]
        h2t = _gen.kotz_h_deriv(y, 2 * t, model.gen)
        term = h2t / fact[t] * float(dvec[sl] @ cvec[sl])
        if acc.add(t, term):
            break
    if not acc.converged:
        raise TruncationError(
            "cone density series did not converge",
            partial_value=pref * acc.total,
            tail_estimate=pref * max(acc._window, default=abs(pref * acc.total)),
            degree_used=acc.degree_used,
        )
    value = pref * acc.total
    if value < 0:
        raise EvaluationError(f"series produced a negative cone density ({value!r})")
    return DensityValue(value, acc.degree_used, pref * acc.tail_estimate)


def central_cone_density(D, model: CentralModel, ctl: SeriesControl = SeriesControl()) -> DensityValue:
    """Central cone density with general SPD covariance Sigma."""
    dims = model.dims
    D = _check_cone_d(D, dims)
    geom = _geom_cone(D, dims)
    if geom == 0.0:
        return DensityValue(0.0, 0, 0.0)
    sdet = float(np.linalg.slogdet(model.sigma_full)[1])
    log_const = (
        dims.n * math.log(2.0)
        + 0.5 * dims.n * (dims.N + dims.K - 1) * math.log(math.pi)
        - _lmvgamma(dims.K / 2.0, dims.n)
        - _lmvgamma((dims.N - 1) / 2.0, dims.n)
        - 0.5 * dims.K * sdet
    )
    basis = _disk_basis(dims, ctl.max_degree)
    dvec = basis.zonal_vector(tuple(D * D)) / basis.c_identity
    s2 = model.scalar_sigma2
    if s2 is not None:
        # C_theta(Sigma^{-1}) = sigma^{-2 l} C_theta(I_{N-1})
        svec = basis.c_identity * np.array(
            [s2 ** (-sum(k)) for k in basis.kappas]
        )
    else:
        inv_eigs = 1.0 / np.linalg.eigvalsh(model.sigma_full)
        svec = basis.zonal_vector(tuple(inv_eigs))
    fact = _factorials(ctl.max_degree)
    pref = math.exp(log_const) * geom
    acc = SeriesAccumulator(ctl)
    for l in range(ctl.max_degree + 1):
        sl = basis.slices[l]
        hl0 = _gen.kotz_h_deriv(0.0, l, model.gen)
        term = hl0 / fact[l] * float(dvec[sl] @ svec[sl])
        if acc.add(l, term):
            break
    if not acc.converged:
        raise TruncationError(
            "central cone series did not converge",
            partial_value=pref * acc.total,
            tail_estimate=pref * max(acc._window, default=abs(pref * acc.total)),
            degree_used=acc.degree_used,
        )
    value = pref * acc.total
    if value < 0:
        raise EvaluationError(f"series produced a negative central cone density ({value!r})")
    return DensityValue(value, acc.degree_used, pref * acc.tail_estimate)


# ---------------------------------------------------------------------------
# central disk density and the Stiefel integral


def stiefel_volume(n: int, m: int) -> float:
    """Volume of the Stiefel manifold of n x m row-orthonormal frames:
    2^n pi^{nm/2} / Gamma_n(m/2)."""
    return math.exp(n * math.log(2.0) + 0.5 * n * m * math.log(math.pi) - _lmvgamma(m / 2.0, n))


def sample_stiefel(n: int, m: int, rng: np.random.Generator, size: int = 1) -> np.ndarray:
    """Uniform (Haar) n x m frames with orthonormal rows, via QR of a
    Gaussian matrix with the R-diagonal sign fix."""
    if n > m:
        raise ContractViolationError(f"need n <= m for a Stiefel frame, got {n} > {m}")
    G = rng.standard_normal((size, m, n))
    Q, R = np.linalg.qr(G)
    signs = np.sign(np.einsum("sii->si", R))
    signs[signs == 0] = 1.0
    Q = Q * signs[:, None, :]
    return np.transpose(Q, (0, 2, 1))


def central_disk_density(
    u,
    model: CentralModel,
    ctl: SeriesControl = SeriesControl(),
    mc: McConfig | None = None,
) -> DensityValue:
    """Central disk density with general SPD Sigma.

    The partition sum in the denominator collapses exactly to
    (tr Sigma^{-1} V' W^2 V)^p with p = n(N+K-n-1)/2, which must be a
    positive integer.  For scalar Sigma the Stiefel integrand is constant
    and the value is closed-form (and generator-free); otherwise the
    integral is estimated by Monte Carlo over uniform frames.
    """
    dims = model.dims
    u = _check_angles(u, dims)
    if dims.radial_power % 2 != 0:
        raise ContractViolationError(
            f"n(N+K-n-1) = {dims.radial_power} must be even for the central disk density"
        )
    p = dims.radial_power // 2
    W = w_from_angles(u, dims.n)
    geom = _geom_cone(W, dims) * jacobian_j(u)
    if geom == 0.0:
        return DensityValue(0.0, 0, 0.0)
    sdet = float(np.linalg.slogdet(model.sigma_full)[1])
    log_const = (
        math.lgamma(p)
        - math.log(2.0)
        - 0.5 * dims.n * (dims.N - dims.n - 1) * math.log(math.pi)
        - _lmvgamma(dims.K / 2.0, dims.n)
        - 0.5 * dims.K * sdet
    )
    pref = math.exp(log_const) * geom
    vol = stiefel_volume(dims.n, dims.N - 1)
    s2 = model.scalar_sigma2
    if s2 is not None:
        return DensityValue(pref * vol * s2**p, 0, 0.0)
    mc = mc or McConfig()
    A = np.linalg.inv(model.sigma_full)
    wsq = W * W
    seq = np.random.SeedSequence(mc.seed)
    streams = [np.random.default_rng(s) for s in seq.spawn(mc.workers)]
    per_worker = [mc.samples // mc.workers] * mc.workers
    per_worker[0] += mc.samples - sum(per_worker)
    total = 0.0
    total_sq = 0.0
    count = 0
    for rng, budget in zip(streams, per_worker):
        done = 0
        while done < budget:
            b = min(mc.batch, budget - done)
            V = sample_stiefel(dims.n, dims.N - 1, rng, size=b)
            quad = np.einsum("sij,jk,sik->si", V, A, V)
            g = (quad @ wsq) ** (-p)
            total += float(np.sum(g))
            total_sq += float(np.sum(g * g))
            done += b
            count += b
    mean = total / count
    var = max(total_sq / count - mean * mean, 0.0)
    stderr = math.sqrt(var / count)
    return DensityValue(pref * vol * mean, 0, 0.0, mc_stderr=pref * vol * stderr)


# ---------------------------------------------------------------------------
# sampling


def sample_isotropic_figure(
    model: IsotropicModel,
    seed=None,
    size: int | None = None,
    rng: np.random.Generator | None = None,
):
    """Draw centered figures Y ~ elliptical(mu, sigma^2 I, h).

    The matrix is mu plus sigma times (radius x uniform direction), with
    the squared radius Gamma(M/2 + T - 1, rate R) distributed; for T = 1,
    R = 1/2 this is exactly the Gaussian draw.  Returns one (N-1) x K
    array, or a (size, N-1, K) stack when ``size`` is given.
    """
    if rng is None:
        rng = np.random.default_rng(seed)
    dims = model.dims
    count = 1 if size is None else int(size)
    shape = (count, dims.N - 1, dims.K)
    sigma = math.sqrt(model.sigma2)
    if model.gen.is_gaussian:
        Y = model.mu + sigma * rng.standard_normal(shape)
    else:
        G = rng.standard_normal(shape)
        norms = np.linalg.norm(G.reshape(count, -1), axis=1)
        U = G / norms[:, None, None]
        r2 = rng.gamma(shape=0.5 * dims.M + model.gen.T - 1, scale=1.0 / model.gen.R, size=count)
        Y = model.mu + sigma * np.sqrt(r2)[:, None, None] * U
    return Y[0] if size is None else Y


def sample_shape_angles(model: IsotropicModel, size: int, seed=None) -> np.ndarray:
    """Shape angles of ``size`` simulated figures: (size, m) array."""
    dims = model.dims
    Y = sample_isotropic_figure(model, seed=seed, size=size)
    out = np.empty((size, dims.m))
    for i in range(size):
        out[i] = shape_from_centered(Y[i], (dims.N, dims.K)).u
    return out

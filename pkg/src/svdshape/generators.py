"""Elliptical density generators of the Kotz subfamily.

The generator of an (N-1) x K matrix-variate elliptical density with
ambient dimension M = K(N-1) is

    h(y) = R^{T-1+M/2} Gamma(M/2) / (pi^{M/2} Gamma(T-1+M/2)) y^{T-1} e^{-R y}

for integer shape T >= 1 and rate R > 0 (power parameter fixed at 1).
T = 1, R = 1/2 is the Gaussian generator (2 pi)^{-M/2} e^{-y/2}.

Derivatives follow Leibniz' rule on y^{T-1} e^{-R y}; because T is a
positive integer every derivative is an entire function, finite at 0.
The module also provides the radial integrals that close the
unit-size shape density series, in closed form (finite gamma sums) with
an adaptive-quadrature fallback used as a numerical oracle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from scipy import integrate

from .errors import ContractViolationError, DomainError

__all__ = [
    "KotzParams",
    "NoncentralityScalars",
    "kotz_h",
    "kotz_h_deriv",
    "radial_integral",
    "central_radial_norm",
]


@dataclass(frozen=True)
class KotzParams:
    """Kotz generator parameters: integer shape T >= 1, rate R > 0,
    ambient dimension M = K(N-1) >= 2.  The power parameter of the
    general Kotz family is fixed at 1; other values are rejected.
    """

    T: int = 1
    R: float = 0.5
    M: int = 2

    def __post_init__(self):
        if not isinstance(self.T, int) or self.T < 1:
            raise ContractViolationError(f"Kotz shape T must be an integer >= 1, got {self.T!r}")
        if not (self.R > 0):
            raise ContractViolationError(f"Kotz rate R must be positive, got {self.R!r}")
        if not isinstance(self.M, int) or self.M < 2:
            raise ContractViolationError(f"ambient dimension M must be an integer >= 2, got {self.M!r}")

    @classmethod
    def gaussian(cls, M: int) -> "KotzParams":
        return cls(T=1, R=0.5, M=M)

    @property
    def is_gaussian(self) -> bool:
        return self.T == 1 and self.R == 0.5

    @property
    def log_norm_const(self) -> float:
        """log of the prefactor R^{T-1+M/2} Gamma(M/2) / (pi^{M/2} Gamma(T-1+M/2))."""
        half_m = 0.5 * self.M
        return (
            (self.T - 1 + half_m) * math.log(self.R)
            + math.lgamma(half_m)
            - half_m * math.log(math.pi)
            - math.lgamma(self.T - 1 + half_m)
        )


@dataclass(frozen=True)
class NoncentralityScalars:
    """Trace and eigenvalues of the noncentrality matrix
    Omega = Sigma^{-1} mu Theta^{-1} mu' (isotropic case: mu mu' / sigma^2).
    """

    trace_omega: float
    omega_eigenvalues: tuple

    def __post_init__(self):
        if self.trace_omega < 0 or any(w < 0 for w in self.omega_eigenvalues):
            raise ContractViolationError("noncentrality eigenvalues must be nonnegative")
        s = sum(self.omega_eigenvalues)
        if abs(s - self.trace_omega) > 1e-10 * max(1.0, self.trace_omega):
            raise ContractViolationError(
                f"trace {self.trace_omega!r} does not match eigenvalue sum {s!r}"
            )


def _falling(x: int, m: int) -> float:
    """x (x-1) ... (x-m+1); zero once the factors cross zero."""
    v = 1.0
    for i in range(m):
        v *= x - i
    return v


def kotz_h(y: float, p: KotzParams) -> float:
    """Generator value h(y), evaluated in log space to survive large M."""
    if y < 0:
        raise DomainError(f"generator argument must be >= 0, got {y!r}")
    if y == 0.0:
        return math.exp(p.log_norm_const) if p.T == 1 else 0.0
    return math.exp(p.log_norm_const + (p.T - 1) * math.log(y) - p.R * y)


def kotz_h_deriv(y: float, k: int, p: KotzParams) -> float:
    """k-th derivative h^{(k)}(y).

    Leibniz form: h^{(k)}(y) = c sum_{m=0}^{min(k, T-1)}
        C(k, m) (T-1)(T-2)...(T-m) (-R)^{k-m} y^{T-1-m} e^{-R y},
    which agrees with the bracket formulation
        (-R)^k y^{T-1} e^{-Ry} {1 + sum_m C(k,m) [prod_i (T-1-i)] (-Ry)^{-m}}
    wherever the latter is defined, and is finite at y = 0 for every
    integer T >= 1.
    """
    if y < 0:
        raise DomainError(f"generator argument must be >= 0, got {y!r}")
    if k < 0:
        raise ContractViolationError(f"derivative order must be >= 0, got {k}")
    if k == 0:
        return kotz_h(y, p)
    c = math.exp(p.log_norm_const)
    if y == 0.0:
        # only the term that empties the polynomial factor survives
        if k < p.T - 1:
            return 0.0
        m = p.T - 1
        return c * math.comb(k, m) * math.factorial(m) * (-p.R) ** (k - m)
    emy = math.exp(-p.R * y)
    total = 0.0
    for m in range(min(k, p.T - 1) + 1):
        total += (
            math.comb(k, m)
            * _falling(p.T - 1, m)
            * (-p.R) ** (k - m)
            * y ** (p.T - 1 - m)
        )
    return c * emy * total


def radial_integral(
    t: int,
    a: float,
    c: float,
    sigma2: float,
    p: KotzParams,
    method: str = "closed",
) -> float:
    """integral_0^inf r^{a-1} h^{(2t)}(c + r^2/sigma^2) dr.

    ``a`` is the full radial power (for the unit-size shape series,
    n(N+K-n-1) + 2t).  For the Kotz family the derivative expands into a
    finite polynomial-times-exponential, so after a binomial expansion of
    (c + r^2/sigma^2)^q every piece is a gamma integral:

        value = (c/2 prefactor) e^{-Rc} sigma^a
                sum_{m} C(2t,m) (T-1)...(T-m) (-1)^m R^{2t-m}
                sum_{j} C(T-1-m, j) c^{T-1-m-j} Gamma(a/2+j) R^{-(a/2+j)}

    ``method="quadrature"`` integrates adaptively instead (used as an
    independent oracle and as an escape hatch for future generators).
    """
    if t < 0:
        raise ContractViolationError(f"derivative half-order t must be >= 0, got {t}")
    if not (a > 0):
        raise DomainError(f"radial power a must be positive, got {a!r}")
    if c < 0:
        raise DomainError(f"noncentrality trace must be >= 0, got {c!r}")
    if not (sigma2 > 0):
        raise DomainError(f"sigma2 must be positive, got {sigma2!r}")
    if method == "quadrature":
        # substitute y = r^2: (1/2) int_0^inf y^{a/2-1} h^{(2t)}(c + y/sigma^2) dy
        val, _ = integrate.quad(
            lambda yy: 0.5 * yy ** (0.5 * a - 1.0) * kotz_h_deriv(c + yy / sigma2, 2 * t, p),
            0.0,
            math.inf,
            epsabs=1e-12,
            epsrel=1e-10,
            limit=400,
        )
        return val
    if method != "closed":
        raise ContractViolationError(f"unknown radial integral method {method!r}")
    k = 2 * t
    half_a = 0.5 * a
    c_h = math.exp(p.log_norm_const)
    total = 0.0
    for m in range(min(k, p.T - 1) + 1):
        outer = math.comb(k, m) * _falling(p.T - 1, m) * (-1.0) ** m * p.R ** (k - m)
        q = p.T - 1 - m
        inner = 0.0
        for j in range(q + 1):
            inner += (
                math.comb(q, j)
                * c ** (q - j)
                * math.exp(math.lgamma(half_a + j) - (half_a + j) * math.log(p.R))
            )
        total += outer * inner
    return 0.5 * c_h * math.exp(-p.R * c) * sigma2 ** half_a * total


def central_radial_norm(d: int, p: KotzParams) -> float:
    """The central radial constant integral_0^inf s^{d-1} h(s^2) ds
    = Gamma(d/2) / (2 pi^{d/2}), requiring d to equal the generator's
    ambient dimension M.  Independent of the generator itself: it is the
    normalization of any elliptical density in dimension d.
    """
    if d != p.M:
        raise ContractViolationError(
            f"radial power d={d} must equal the ambient dimension M={p.M}"
        )
    return 0.5 * math.exp(math.lgamma(0.5 * d) - 0.5 * d * math.log(math.pi))

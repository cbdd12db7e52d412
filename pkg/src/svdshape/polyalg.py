"""Integer partitions, generalized Pochhammer symbols, and zonal polynomials.

Zonal polynomials are computed in their C normalization, fixed by the
identity ``sum_{kappa |- f} C_kappa(X) = (tr X)^f``.  Internally each
C_kappa is expanded over monomial symmetric functions.  The monomial
coefficients of the monic expansion satisfy the classical eigenfunction
recurrence (a Jack-polynomial coefficient recurrence at Jack parameter 2):

    psi[kappa, kappa] = 1
    psi[kappa, lam]   = sum_mu ((l_i + t) - (l_j - t)) * psi[kappa, mu]
                          / (rho(kappa) - rho(lam))

where ``mu`` runs over partitions obtained from ``lam`` by moving ``t``
units from a lower part ``l_j`` onto a higher part ``l_i`` (i < j), and
``rho(kappa) = sum_i k_i (k_i - i)``.  The monic polynomial is then scaled
into the C normalization by ``2^f f! / prod_{s in kappa}(2 a(s) + l(s) + 2)``
with ``a``/``l`` the arm and leg lengths of the Young-diagram cell ``s``.

Coefficient tables depend only on (weight, number-of-parts cap) and are
cached for reuse; evaluation at a spectrum is a cheap dot product against
monomial values.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import permutations

__all__ = [
    "Partition",
    "ZonalTable",
    "SeriesControl",
    "NeumaierSum",
    "MAX_ZONAL_DEGREE",
    "enumerate_partitions",
    "gen_pochhammer",
    "rising_factorial",
    "zonal",
    "zonal_table",
    "zonal_at_identity",
    "monic_coefficient_block",
    "monomial_values",
]

from .errors import CapacityError, ContractViolationError

# Hard cap on the weight of any partition handled by the zonal machinery.
# Partition counts grow super-polynomially; the cap turns runaway series
# configurations into an explicit error instead of an apparent hang.
MAX_ZONAL_DEGREE = 60


class Partition(tuple):
    """A partition of a nonnegative integer: a non-increasing tuple of
    positive parts.  The empty partition () has weight 0.
    """

    def __new__(cls, parts=()):
        parts = tuple(int(p) for p in parts)
        for i, p in enumerate(parts):
            if p <= 0:
                raise ContractViolationError(
                    f"partition parts must be positive, got {parts}"
                )
            if i > 0 and parts[i - 1] < p:
                raise ContractViolationError(
                    f"partition parts must be non-increasing, got {parts}"
                )
        return super().__new__(cls, parts)

    @property
    def weight(self) -> int:
        return sum(self)

    @property
    def num_parts(self) -> int:
        return len(self)

    def conjugate(self) -> "Partition":
        if not self:
            return Partition()
        cols = [0] * self[0]
        for p in self:
            for j in range(p):
                cols[j] += 1
        return Partition(cols)


def enumerate_partitions(f: int, max_parts: int) -> list[Partition]:
    """All partitions of ``f`` into at most ``max_parts`` parts, in
    lexicographically descending order.  ``f = 0`` yields [()].
    """
    if f < 0:
        raise ContractViolationError(f"cannot partition a negative integer ({f})")
    if max_parts < 1:
        raise ContractViolationError(f"max_parts must be >= 1, got {max_parts}")
    out: list[Partition] = []

    def rec(remaining, largest, prefix):
        if remaining == 0:
            out.append(Partition(prefix))
            return
        if len(prefix) == max_parts:
            return
        for p in range(min(remaining, largest), 0, -1):
            rec(remaining - p, p, prefix + [p])

    rec(f, f if f else 1, [])
    if f == 0:
        out = [Partition()]
    return out


def rising_factorial(x: float, f: int) -> float:
    """(x)_f = x (x+1) ... (x+f-1); empty product for f = 0."""
    v = 1.0
    for i in range(f):
        v *= x + i
    return v


def gen_pochhammer(a: float, kappa) -> float:
    """Generalized hypergeometric coefficient (a)_kappa at Jack parameter 2:
    prod_j (a - (j-1)/2)_{k_j}.  Empty partition gives 1.
    """
    kappa = kappa if isinstance(kappa, Partition) else Partition(kappa)
    v = 1.0
    for j, kj in enumerate(kappa, start=1):
        v *= rising_factorial(a - (j - 1) / 2.0, kj)
    return v


# ---------------------------------------------------------------------------
# monomial-coefficient tables


def _rho(parts) -> int:
    return sum(k * (k - i) for i, k in enumerate(parts, start=1))


def _dominated_by(lam, kappa) -> bool:
    """True when lam <= kappa in the dominance order (equal weights)."""
    acc_l = acc_k = 0
    for i in range(max(len(lam), len(kappa))):
        acc_l += lam[i] if i < len(lam) else 0
        acc_k += kappa[i] if i < len(kappa) else 0
        if acc_l > acc_k:
            return False
    return True


def _upward_moves(lam):
    """Yield (mu, factor) for every move of t units from part j onto an
    earlier part i of lam.  The factor is (l_i + t) - (l_j - t) before
    re-sorting; identical mu arising from different (i, j, t) repeat.
    """
    p = len(lam)
    for j in range(1, p):
        for i in range(j):
            for t in range(1, lam[j] + 1):
                new = list(lam)
                new[i] += t
                new[j] -= t
                factor = new[i] - new[j]
                parts = tuple(sorted((x for x in new if x > 0), reverse=True))
                yield parts, factor


def _monic_coeff_family(f: int, lambda_cap: int, kappa_cap: int) -> dict:
    """Monic monomial coefficients {kappa: {lam: psi}} for every kappa |- f
    with at most ``kappa_cap`` parts, expanded over lam with at most
    ``lambda_cap`` parts.  Restricting lam to <= lambda_cap parts is closed
    under the recurrence and exact for evaluation at lambda_cap
    eigenvalues, because dropped monomials vanish there.
    """
    plist = enumerate_partitions(f, lambda_cap)  # descending lex
    rho = {lam: _rho(lam) for lam in plist}
    family = {}
    for ki, kappa in enumerate(plist):
        if kappa.num_parts > kappa_cap:
            continue
        coeffs = {tuple(kappa): 1.0}
        for lam in plist[ki + 1 :]:
            if not _dominated_by(lam, kappa):
                continue
            num = 0.0
            for mu, factor in _upward_moves(lam):
                c = coeffs.get(mu)
                if c is not None:
                    num += factor * c
            if num != 0.0:
                coeffs[tuple(lam)] = num / (rho[kappa] - rho[lam])
        family[tuple(kappa)] = coeffs
    return family


_COEFF_CACHE: dict = {}


def _coeff_family(f: int, lambda_cap: int, kappa_cap: int | None = None) -> dict:
    if kappa_cap is None or kappa_cap > lambda_cap:
        kappa_cap = lambda_cap
    key = (f, lambda_cap, kappa_cap)
    fam = _COEFF_CACHE.get(key)
    if fam is None:
        fam = _monic_coeff_family(f, lambda_cap, kappa_cap)
        _COEFF_CACHE[key] = fam
    return fam


def _c_norm(kappa) -> float:
    """Scale factor from the monic monomial expansion to the C
    normalization: 2^f f! / prod_cells (2*arm + leg + 2).
    """
    f = sum(kappa)
    conj = [0] * (kappa[0] if kappa else 0)
    for p in kappa:
        for j in range(p):
            conj[j] += 1
    denom = 1.0
    for i, row in enumerate(kappa):
        for j in range(row):
            arm = row - (j + 1)
            leg = conj[j] - (i + 1)
            denom *= 2 * arm + leg + 2
    return 2.0**f * math.factorial(f) / denom


# ---------------------------------------------------------------------------
# monomial symmetric function evaluation


def _power_table(xs, max_exp: int):
    return [[x**e for e in range(max_exp + 1)] for x in xs]


def _monomial_value(lam, xs, pows) -> float:
    """m_lam(xs) using precomputed powers.  Zero when lam has more parts
    than there are variables.
    """
    L = len(xs)
    p = len(lam)
    if p > L:
        return 0.0
    if p == 0:
        return 1.0
    if L == 1:
        return pows[0][lam[0]]
    if L == 2:
        a = lam[0]
        b = lam[1] if p == 2 else 0
        if a == b:
            return pows[0][a] * pows[1][a]
        return pows[0][a] * pows[1][b] + pows[0][b] * pows[1][a]
    padded = tuple(lam) + (0,) * (L - p)
    total = 0.0
    for perm in set(permutations(padded)):
        term = 1.0
        for idx, e in enumerate(perm):
            if e:
                term *= pows[idx][e]
        total += term
    return total


def _check_degree(f: int):
    if f > MAX_ZONAL_DEGREE:
        raise CapacityError(
            f"zonal degree {f} exceeds the hard cap {MAX_ZONAL_DEGREE}"
        )


def zonal(kappa, eigenvalues) -> float:
    """Zonal polynomial C_kappa at the diagonal matrix with the given
    eigenvalues.  Degree 1 equals the trace; partitions with more parts
    than nonzero eigenvalues give 0.
    """
    kappa = kappa if isinstance(kappa, Partition) else Partition(kappa)
    f = kappa.weight
    _check_degree(f)
    xs = [float(x) for x in eigenvalues if x != 0.0]
    if kappa.num_parts > len(xs):
        return 0.0
    if f == 0:
        return 1.0
    fam = _coeff_family(f, len(xs))
    coeffs = fam[tuple(kappa)]
    pows = _power_table(xs, f)
    acc = NeumaierSum()
    for lam, c in coeffs.items():
        acc.add(c * _monomial_value(lam, xs, pows))
    return _c_norm(kappa) * acc.total


@dataclass(frozen=True)
class ZonalTable:
    """Zonal polynomial values C_kappa for every kappa with weight up to
    ``max_degree`` and at most len(eigenvalues) parts, for one fixed
    spectrum.  Immutable; safe to share between threads.
    """

    eigenvalues: tuple
    max_degree: int
    values: dict

    def __getitem__(self, kappa) -> float:
        kappa = tuple(kappa)
        v = self.values.get(kappa)
        if v is None:
            if sum(kappa) <= self.max_degree:
                return 0.0  # more parts than eigenvalues
            raise KeyError(kappa)
        return v

    def degree_sum(self, f: int) -> float:
        return math.fsum(v for k, v in self.values.items() if sum(k) == f)

    def csv_rows(self):
        """Debug dump: rows of ``degree,partition,value``."""
        rows = []
        for k in sorted(self.values, key=lambda k: (sum(k), [-p for p in k])):
            part = "+".join(str(p) for p in k) if k else "0"
            rows.append(f"{sum(k)},{part},{self.values[k]!r}")
        return rows


def zonal_table(eigenvalues, max_degree: int, max_parts: int | None = None) -> ZonalTable:
    """Tabulate C_kappa for all kappa with |kappa| <= max_degree and at
    most len(eigenvalues) parts.

    ``max_parts`` further restricts the tabulated partitions; use it when
    the consuming series pairs each C_kappa with a factor that vanishes
    beyond some part count.  The normalization invariant
    sum_{kappa |- f} C_kappa = (tr)^f holds for unrestricted tables.
    """
    if max_degree < 0:
        raise ContractViolationError("max_degree must be >= 0")
    _check_degree(max_degree)
    eigs = tuple(float(x) for x in eigenvalues)
    xs = [x for x in eigs if x != 0.0]
    nvar = max(len(xs), 1)
    kcap = len(eigs) if max_parts is None else min(max_parts, len(eigs))
    values = {(): 1.0}
    for f in range(1, max_degree + 1):
        if xs:
            fam = _coeff_family(f, min(nvar, f), min(kcap, f))
            pows = _power_table(xs, f)
            for kappa, coeffs in fam.items():
                acc = NeumaierSum()
                for lam, c in coeffs.items():
                    acc.add(c * _monomial_value(lam, xs, pows))
                values[kappa] = _c_norm(kappa) * acc.total
        # partitions with more parts than nonzero eigenvalues vanish and
        # are simply absent; __getitem__ reports them as 0.
        for kappa in enumerate_partitions(f, min(kcap, len(eigs))):
            values.setdefault(tuple(kappa), 0.0)
    return ZonalTable(eigenvalues=eigs, max_degree=max_degree, values=values)


def monic_coefficient_block(f: int, parts_cap: int):
    """Dense matrix of C-normalized monomial coefficients for weight f:
    entry [i, j] is the coefficient of m_{lam_j} in C_{kappa_i}, with both
    kappa and lam running over enumerate_partitions(f, parts_cap).  Exact
    for evaluation at parts_cap eigenvalues.
    """
    import numpy as _np

    plist = enumerate_partitions(f, parts_cap)
    fam = _coeff_family(f, min(parts_cap, f) if f else 1)
    idx = {tuple(k): i for i, k in enumerate(plist)}
    block = _np.zeros((len(plist), len(plist)))
    for kappa in plist:
        norm = _c_norm(kappa)
        for lam, c in fam[tuple(kappa)].items():
            block[idx[tuple(kappa)], idx[lam]] = norm * c
    return plist, block


def monomial_values(eigenvalues, partitions) -> list:
    """m_lam at the given eigenvalues for each partition in order."""
    xs = [float(x) for x in eigenvalues if x != 0.0]
    maxe = max((lam[0] for lam in partitions if lam), default=0)
    pows = _power_table(xs, maxe)
    return [_monomial_value(lam, xs, pows) for lam in partitions]


def zonal_at_identity(kappa, dim: int) -> float:
    """C_kappa(I_dim) in closed form:

    2^{2f} f! (dim/2)_kappa prod_{i<j}(2 k_i - 2 k_j - i + j)
        / prod_i (2 k_i + p - i)!

    Vanishes automatically when kappa has more than ``dim`` parts.
    """
    kappa = kappa if isinstance(kappa, Partition) else Partition(kappa)
    f = kappa.weight
    _check_degree(f)
    if f == 0:
        return 1.0
    p = kappa.num_parts
    if p > dim:
        return 0.0
    lognum = 2 * f * math.log(2.0) + math.lgamma(f + 1)
    val = gen_pochhammer(dim / 2.0, kappa)
    if val == 0.0:
        return 0.0
    for i in range(p):
        for j in range(i + 1, p):
            val *= 2 * kappa[i] - 2 * kappa[j] - (i + 1) + (j + 1)
    logden = sum(math.lgamma(2 * kappa[i] + p - (i + 1) + 1) for i in range(p))
    return val * math.exp(lognum - logden)


# ---------------------------------------------------------------------------
# series plumbing


class NeumaierSum:
    """Compensated (Neumaier) accumulator for sums whose terms span many
    orders of magnitude."""

    __slots__ = ("_s", "_c")

    def __init__(self):
        self._s = 0.0
        self._c = 0.0

    def add(self, x: float):
        t = self._s + x
        if abs(self._s) >= abs(x):
            self._c += (self._s - t) + x
        else:
            self._c += (x - t) + self._s
        self._s = t

    @property
    def total(self) -> float:
        return self._s + self._c


@dataclass(frozen=True)
class SeriesControl:
    """Deterministic truncation policy for the density series.

    A series converges once ``consecutive_tail_terms`` successive
    per-degree contributions each satisfy |term| <= tail_rel_tol * |sum|
    with a nonzero running sum; otherwise evaluation stops at
    ``max_degree`` with a truncation error.
    """

    max_degree: int = 40
    tail_rel_tol: float = 1e-10
    consecutive_tail_terms: int = 3

    def __post_init__(self):
        if self.max_degree < 0:
            raise ContractViolationError("max_degree must be >= 0")
        if not (self.tail_rel_tol > 0.0):
            raise ContractViolationError("tail_rel_tol must be positive")
        if self.consecutive_tail_terms < 1:
            raise ContractViolationError("consecutive_tail_terms must be >= 1")
        _check_degree(self.max_degree)


class SeriesAccumulator:
    """Degree-major series accumulation with the SeriesControl stop rule.

    Feed one per-degree contribution at a time; ``converged`` flips once
    the tail window is satisfied.  ``tail_estimate`` is the largest
    contribution seen inside the current tail window.
    """

    def __init__(self, ctl: SeriesControl):
        self.ctl = ctl
        self._acc = NeumaierSum()
        self._streak = 0
        self._window: list[float] = []
        self.converged = False
        self.degree_used = -1

    def add(self, degree: int, term: float) -> bool:
        """Add the degree contribution; returns True once converged."""
        self._acc.add(term)
        self.degree_used = degree
        total = self._acc.total
        if total != 0.0 and abs(term) <= self.ctl.tail_rel_tol * abs(total):
            self._streak += 1
            self._window.append(abs(term))
        else:
            self._streak = 0
            self._window = []
        if self._streak >= self.ctl.consecutive_tail_terms:
            self.converged = True
        return self.converged

    @property
    def total(self) -> float:
        return self._acc.total

    @property
    def tail_estimate(self) -> float:
        return max(self._window) if self._window else float("inf")

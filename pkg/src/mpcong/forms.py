"""Concrete q-expansions: eta products, Eisenstein series, level-one bases.

Every constructor takes an explicit truncation ``N`` (coefficients are
returned for exponents ``< N``) and a modulus, ``None`` meaning exact
integers.  Nothing extends itself behind the caller's back.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .cache import active_cache
from .series import (
    Modulus,
    QSeries,
    SeriesError,
    _zeros,
    op_V,
    series_div,
    series_mul,
    series_pow,
)


def _ceil_div(a: int, b: int) -> int:
    return -((-a) // b)


# ---------------------------------------------------------------------------
# Eta products


def pentagonal_terms(N: int) -> list[tuple[int, int]]:
    """``(exponent, sign)`` pairs of prod(1 - q^n) below ``N``, ascending."""
    terms = [(0, 1)]
    j = 1
    while True:
        a = j * (3 * j - 1) // 2
        if a >= N:
            break
        s = -1 if j % 2 else 1
        terms.append((a, s))
        b = a + j
        if b < N:
            terms.append((b, s))
        j += 1
    return terms


def euler_product(N: int, modulus: Modulus | None = None) -> QSeries:
    """``prod_{n>=1} (1 - q^n)`` up to ``q^N`` from the pentagonal expansion."""
    if N < 1:
        raise SeriesError(f"euler_product needs N >= 1 (got {N})")
    arr = _zeros(N, modulus)
    for e, s in pentagonal_terms(N):
        arr[e] = s if modulus is None else s % modulus.value
    return QSeries(0, arr, N, modulus)


def euler_power(e: int, N: int, modulus: Modulus | None = None) -> QSeries:
    """``prod (1 - q^n)^e`` to ``q^N`` for any integer ``e``.

    Negative powers are repeated sparse divisions; positive powers use binary
    powering of the pentagonal series.
    """
    P = euler_product(N, modulus)
    if e >= 0:
        return series_pow(P, e)
    out = QSeries.one(N, modulus)
    for _ in range(-e):
        out = series_div(out, P)
    return out


def eta24_pow(gamma: int, N: int, modulus: Modulus | None = None) -> QSeries:
    """``eta(24z)^gamma = (q prod(1 - q^{24n}))^gamma`` to ``q^N``."""
    if N <= gamma:
        raise SeriesError(f"eta24_pow needs N > gamma (got N={N}, gamma={gamma})")
    L = _ceil_div(N - gamma, 24)
    body = op_V(euler_power(gamma, L, modulus), 24).shift(gamma)
    return body.truncate(N)


def delta(N: int, modulus: Modulus | None = None) -> QSeries:
    """Ramanujan's ``Delta = q prod(1 - q^n)^24`` to ``q^N``."""
    return euler_power(24, N - 1, modulus).shift(1) if N > 1 else QSeries.zero(N, modulus)


# ---------------------------------------------------------------------------
# Eisenstein series


def divisor_sigma(power: int, N: int) -> list[int]:
    """``sigma_power(n)`` for ``0 <= n < N`` by a divisor sieve (entry 0 is 0)."""
    sig = [0] * N
    for d in range(1, N):
        dp = d**power
        for mult in range(d, N, d):
            sig[mult] += dp
    return sig


def eisenstein(which: str, N: int, modulus: Modulus | None = None) -> QSeries:
    """``E4 = 1 + 240 sum sigma_3(n) q^n`` or ``E6 = 1 - 504 sum sigma_5(n) q^n``."""
    if N < 1:
        raise SeriesError(f"eisenstein needs N >= 1 (got {N})")
    if which in ("E4", 4):
        power, scale = 3, 240
    elif which in ("E6", 6):
        power, scale = 5, -504
    else:
        raise SeriesError(f"unknown Eisenstein series {which!r}")
    sig = divisor_sigma(power, N)
    coeffs = [1] + [scale * s for s in sig[1:]]
    return QSeries.from_coeffs(coeffs, 0, N, modulus)


# ---------------------------------------------------------------------------
# Multipartitions and the eta quotient


def partition_r_series(r: int, N: int, modulus: Modulus | None = None) -> QSeries:
    """``sum p_r(n) q^n = prod (1 - q^n)^{-r}`` for ``n < N``."""
    if r < 1:
        raise SeriesError(f"r must be a positive integer (got {r})")
    cache = active_cache()
    if cache is None:
        return euler_power(-r, N, modulus)
    return cache.get_or_build("partition_r", (r,), N, modulus, lambda: euler_power(-r, N, modulus))


def eta_quotient_f(params, N: int, modulus: Modulus | None | str = "default") -> QSeries:
    """``(eta(m^k z)^{m^k} / eta(z))^r`` to ``q^N``.

    The result has valuation ``(m^{2k} - 1) r / 24``.  By default it is reduced
    modulo ``m^k``; pass ``modulus=None`` for exact integers.
    """
    mod = params.modulus if modulus == "default" else modulus
    M, r = params.mk, params.r
    v = (M * M - 1) * r // 24
    if N <= v:
        raise SeriesError(f"eta_quotient_f needs N > {v} (got {N})")
    L = N - v
    partitions = partition_r_series(r, L, mod)
    dilated = op_V(euler_power(M * r, _ceil_div(L, M), mod), M).truncate(L)
    return series_mul(partitions, dilated).shift(v)


# ---------------------------------------------------------------------------
# Level-one spaces


def dim_M(weight: int) -> int:
    """Dimension of ``M_weight(SL2(Z))``."""
    if weight < 0 or weight % 2 or weight == 2:
        return 0
    return weight // 12 + (0 if weight % 12 == 2 else 1)


@dataclass(frozen=True)
class MonomialBasisElement:
    """``E4^a E6^b Delta^c`` of weight ``4a + 6b + 12c``."""

    a: int
    b: int
    c: int

    @property
    def weight(self) -> int:
        return 4 * self.a + 6 * self.b + 12 * self.c

    def label(self) -> str:
        parts = []
        for name, e in (("E4", self.a), ("E6", self.b), ("Δ", self.c)):
            if e == 1:
                parts.append(name)
            elif e > 1:
                parts.append(f"{name}^{e}")
        return "·".join(parts) or "1"


def canonical_monomials(weight: int) -> list[MonomialBasisElement]:
    """The monomials ``E4^a E6^b Delta^j`` with ``Delta^j`` leading at ``q^j``.

    For each ``j`` the residual weight ``weight - 12j`` takes ``b = 0`` when it
    is divisible by 4 and ``b = 1`` otherwise.
    """
    if weight < 0 or weight % 2:
        return []
    out = []
    j = 0
    while weight - 12 * j >= 0:
        w = weight - 12 * j
        b = 0 if w % 4 == 0 else 1
        a = (w - 6 * b) // 4
        if a >= 0:
            out.append(MonomialBasisElement(a, b, j))
        j += 1
    return out


@dataclass(frozen=True, eq=False)
class EchelonBasis:
    """A triangular basis with leading coefficient 1 at distinct exponents.

    ``reduced`` bases (Miller bases) also vanish at every other element's
    leading exponent, so coordinates can be read off directly.
    """

    weight: int
    elements: tuple[QSeries, ...]
    leading: tuple[int, ...]
    monomials: tuple[MonomialBasisElement, ...]
    reduced: bool = True
    gamma: int | None = field(default=None)

    @property
    def dimension(self) -> int:
        return len(self.elements)

    def __len__(self) -> int:
        return len(self.elements)

    def __iter__(self):
        return iter(self.elements)

    def coordinates(self, g: QSeries) -> list[int]:
        """Triangular solve using the coefficients at the leading exponents."""
        if not self.elements:
            return []
        coords = []
        residual = g
        for e, lead in zip(self.elements, self.leading):
            c = residual[lead]
            coords.append(c)
            if c:
                residual = residual - e * c
        return coords

    def combine(self, coords: list[int]) -> QSeries:
        if not self.elements:
            raise SeriesError("empty basis has no combinations")
        out = self.elements[0] * coords[0]
        for e, c in zip(self.elements[1:], coords[1:]):
            if c:
                out = out + e * c
        return out

    def residual(self, g: QSeries) -> tuple[list[int], QSeries]:
        coords = self.coordinates(g)
        if not self.elements:
            return coords, g
        return coords, g - self.combine(coords)


def _monomial_expansions(weight: int, N: int, modulus: Modulus | None) -> list[QSeries]:
    mons = canonical_monomials(weight)
    if not mons:
        return []
    e4 = eisenstein("E4", N, modulus)
    e6 = eisenstein("E6", N, modulus)
    d = delta(N, modulus)
    e4cube = series_pow(e4, 3)
    # walk from the highest Delta power down so E4 powers grow by E4^3 steps
    out: list[QSeries] = [None] * len(mons)  # type: ignore[list-item]
    e4pow: QSeries | None = None
    last_a = None
    for idx in range(len(mons) - 1, -1, -1):
        mon = mons[idx]
        if e4pow is None:
            e4pow = series_pow(e4, mon.a)
        else:
            step = mon.a - last_a
            e4pow = series_mul(e4pow, e4cube if step == 3 else series_pow(e4, step))
        last_a = mon.a
        f = e4pow
        if mon.b:
            f = series_mul(f, e6)
        out[idx] = f
    dpow = QSeries.one(N, modulus)
    for idx, mon in enumerate(mons):
        if mon.c:
            dpow = series_mul(dpow, d)
        out[idx] = series_mul(out[idx], dpow) if mon.c else out[idx]
    return [f.truncate(N) for f in out]


def echelon_basis_M(
    weight: int, N: int, modulus: Modulus | None = None, reduced: bool = True
) -> EchelonBasis:
    """Basis of ``M_weight(SL2(Z))`` to ``q^N`` with leading terms ``q^0..q^{d-1}``.

    With ``reduced=False`` the raw monomials are returned (still triangular
    with unit leading coefficients).
    """
    if weight % 2:
        raise SeriesError(f"weight must be even (got {weight})")
    mons = canonical_monomials(weight)
    d = len(mons)
    if d != dim_M(weight):
        raise AssertionError(f"monomial count {d} != dim {dim_M(weight)}")
    if d == 0:
        return EchelonBasis(weight, (), (), (), reduced)
    if N < d:
        raise SeriesError(f"N={N} too small for a basis of dimension {d}")
    elems = _monomial_expansions(weight, N, modulus)
    if reduced:
        for j in range(d - 1, 0, -1):
            for i in range(j):
                c = elems[i][j]
                if c:
                    elems[i] = elems[i] - elems[j] * c
    return EchelonBasis(weight, tuple(elems), tuple(range(d)), tuple(mons), reduced)


def basis_S(
    gamma: int,
    weight: int,
    N: int,
    modulus: Modulus | None = None,
    reduced: bool = True,
) -> EchelonBasis:
    """Basis ``eta(24z)^gamma * phi_j(24z)`` of ``S_{gamma,weight}`` to ``q^N``.

    Element ``j`` leads with ``q^{gamma + 24 j}`` and is supported on
    exponents congruent to ``gamma`` mod 24.
    """
    d = dim_M(weight)
    if d and N <= gamma + 24 * (d - 1):
        raise SeriesError(
            f"N={N} too small: need N > gamma + 24(d-1) = {gamma + 24 * (d - 1)}"
        )
    if d == 0:
        return EchelonBasis(weight, (), (), (), reduced, gamma)
    L = _ceil_div(N - gamma, 24)
    base = echelon_basis_M(weight, L, modulus, reduced)
    eta = euler_power(gamma, L, modulus)
    elems = tuple(
        op_V(series_mul(eta, e), 24).shift(gamma).truncate(N) for e in base.elements
    )
    leading = tuple(gamma + 24 * j for j in range(d))
    return EchelonBasis(weight, elems, leading, base.monomials, reduced, gamma)

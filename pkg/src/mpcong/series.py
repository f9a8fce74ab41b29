"""Truncated q-series over Z or Z/m^k.

A :class:`QSeries` stores a dense window of coefficients ``a(n)`` for
``offset <= n < trunc``.  Coefficients below ``offset`` are zero; nothing is
known at or above ``trunc``.  Every operation computes the tightest ``trunc``
its inputs justify, so a result never claims coefficients it cannot back.

Residue-mode series hold ``int64`` residues in ``[0, m^k)``; exact-mode
series (``modulus is None``) hold Python integers in an object array.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterable

import numpy as np

from . import _kernels

MODULUS_BOUND = 1 << 63
_MR_BASES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37)


class SeriesError(ValueError):
    """Raised on incompatible operands or an impossible series operation."""


def is_prime(n: int) -> bool:
    """Deterministic Miller-Rabin, exact for ``n < 3.3e24``."""
    if n < 2:
        return False
    for p in _MR_BASES:
        if n % p == 0:
            return n == p
    d, s = n - 1, 0
    while d % 2 == 0:
        d //= 2
        s += 1
    for a in _MR_BASES:
        x = pow(a, d, n)
        if x in (1, n - 1):
            continue
        for _ in range(s - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


@dataclass(frozen=True)
class Modulus:
    """The residue ring Z/m^k for a prime ``m >= 5``."""

    m: int
    k: int = 1

    def __post_init__(self) -> None:
        if not isinstance(self.m, (int, np.integer)) or not is_prime(int(self.m)) or self.m < 5:
            raise SeriesError(f"m must be a prime >= 5 (got {self.m})")
        if self.k < 1:
            raise SeriesError(f"k must be a positive integer (got {self.k})")
        if int(self.m) ** int(self.k) >= MODULUS_BOUND:
            raise SeriesError(f"{self.m}^{self.k} does not fit below 2^63")
        object.__setattr__(self, "m", int(self.m))
        object.__setattr__(self, "k", int(self.k))

    @property
    def value(self) -> int:
        return self.m**self.k

    def is_unit(self, a: int) -> bool:
        return int(a) % self.m != 0

    def inverse(self, a: int) -> int:
        if not self.is_unit(a):
            raise SeriesError(f"{a} is not a unit modulo {self.value}")
        return pow(int(a), -1, self.value)

    def divides(self, other: "Modulus") -> bool:
        return self.m == other.m and self.k <= other.k

    def __str__(self) -> str:
        return f"{self.m}^{self.k}" if self.k > 1 else str(self.m)


# ---------------------------------------------------------------------------
# Kronecker symbol and quadratic characters


def kronecker(a: int, n: int) -> int:
    """The Kronecker symbol ``(a/n)`` with the usual extensions to ``n <= 0``
    and even ``n``."""
    a, n = int(a), int(n)
    if n == 0:
        return 1 if a in (1, -1) else 0
    result = 1
    if n < 0:
        n = -n
        if a < 0:
            result = -result
    v = 0
    while n % 2 == 0:
        n //= 2
        v += 1
    if v:
        if a % 2 == 0:
            return 0
        if v % 2 == 1 and a % 8 in (3, 5):
            result = -result
    # n is now odd and positive; Jacobi symbol
    a %= n
    while a:
        while a % 2 == 0:
            a //= 2
            if n % 8 in (3, 5):
                result = -result
        a, n = n, a
        if a % 4 == 3 and n % 4 == 3:
            result = -result
        a %= n
    return result if n == 1 else 0


@dataclass(frozen=True)
class QuadChar:
    """A quadratic character evaluated at integer exponents.

    ``kind`` is one of ``"kronecker-12"`` (``n -> (12/n)``), ``"legendre"``
    (``n -> (n/ell)``) or ``"signed-legendre"``
    (``n -> ((-1)^sign_exponent * n / ell)``).
    """

    kind: str
    ell: int | None = None
    sign_exponent: int = 0

    def __post_init__(self) -> None:
        if self.kind not in ("kronecker-12", "legendre", "signed-legendre"):
            raise SeriesError(f"unknown character kind {self.kind!r}")
        if self.kind != "kronecker-12":
            if self.ell is None or self.ell < 3 or not is_prime(self.ell):
                raise SeriesError(f"{self.kind} needs an odd prime ell (got {self.ell})")

    @classmethod
    def chi12(cls) -> "QuadChar":
        return cls("kronecker-12")

    @classmethod
    def legendre(cls, ell: int) -> "QuadChar":
        return cls("legendre", ell)

    @classmethod
    def signed_legendre(cls, ell: int, sign_exponent: int) -> "QuadChar":
        return cls("signed-legendre", ell, sign_exponent % 2)

    def __call__(self, n: int) -> int:
        if self.kind == "kronecker-12":
            return kronecker(12, n)
        if self.kind == "legendre":
            return kronecker(n, self.ell)
        return kronecker(-n if self.sign_exponent % 2 else n, self.ell)

    def values(self, start: int, stop: int) -> np.ndarray:
        """Character values on ``range(start, stop)`` as an int64 array."""
        n = np.arange(start, stop, dtype=np.int64)
        if self.kind == "kronecker-12":
            table = np.array([kronecker(12, i) for i in range(12)], dtype=np.int64)
            return table[n % 12]
        ell = self.ell
        table = np.array([kronecker(i, ell) for i in range(ell)], dtype=np.int64)
        out = table[n % ell]
        if self.kind == "signed-legendre" and self.sign_exponent % 2:
            out = out * kronecker(-1, ell)
        return out


# ---------------------------------------------------------------------------
# The series type


def _as_coeff_array(values: Iterable[int] | np.ndarray, modulus: Modulus | None) -> np.ndarray:
    if modulus is None:
        arr = np.empty(len(values), dtype=object)  # type: ignore[arg-type]
        arr[:] = [int(v) for v in values]
        return arr
    M = modulus.value
    if isinstance(values, np.ndarray) and values.dtype == np.int64:
        return np.mod(values, M)
    return np.array([int(v) % M for v in values], dtype=np.int64)


@dataclass(frozen=True, eq=False)
class QSeries:
    """Truncated Laurent q-series ``sum a(n) q^n`` known for ``n < trunc``."""

    offset: int
    coeffs: np.ndarray
    trunc: int
    modulus: Modulus | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "offset", int(self.offset))
        object.__setattr__(self, "trunc", int(self.trunc))
        if len(self.coeffs) != max(self.trunc - self.offset, 0):
            raise SeriesError(
                f"coefficient window has length {len(self.coeffs)}, "
                f"expected trunc - offset = {self.trunc - self.offset}"
            )
        want = object if self.modulus is None else np.int64
        if self.coeffs.dtype != want:
            raise SeriesError(f"coefficient dtype {self.coeffs.dtype} does not match mode")
        self.coeffs.setflags(write=False)

    # -- constructors -----------------------------------------------------

    @classmethod
    def from_coeffs(
        cls,
        coeffs: Iterable[int],
        offset: int = 0,
        trunc: int | None = None,
        modulus: Modulus | None = None,
    ) -> "QSeries":
        """Build a series from ``a(offset), a(offset+1), ...``.

        With ``trunc`` larger than the data, the missing coefficients are
        taken to be zero (the input is a polynomial known exactly that far).
        """
        coeffs = list(coeffs) if not isinstance(coeffs, np.ndarray) else coeffs
        if trunc is None:
            trunc = offset + len(coeffs)
        n = trunc - offset
        arr = _as_coeff_array(coeffs[:n], modulus)
        if len(arr) < n:
            arr = np.concatenate([arr, _zeros(n - len(arr), modulus)])
        return cls(offset, arr, trunc, modulus)

    @classmethod
    def monomial(
        cls, exponent: int, trunc: int, coeff: int = 1, modulus: Modulus | None = None
    ) -> "QSeries":
        return cls.from_coeffs([coeff], exponent, trunc, modulus)

    @classmethod
    def one(cls, trunc: int, modulus: Modulus | None = None) -> "QSeries":
        return cls.monomial(0, trunc, 1, modulus)

    @classmethod
    def zero(cls, trunc: int, modulus: Modulus | None = None, offset: int = 0) -> "QSeries":
        return cls(offset, _zeros(max(trunc - offset, 0), modulus), trunc, modulus)

    # -- access -----------------------------------------------------------

    @property
    def exact(self) -> bool:
        return self.modulus is None

    def __len__(self) -> int:
        return len(self.coeffs)

    def __getitem__(self, n: int) -> int:
        if n >= self.trunc:
            raise IndexError(f"coefficient of q^{n} is beyond trunc {self.trunc}")
        if n < self.offset:
            return 0
        return int(self.coeffs[n - self.offset])

    def window(self, start: int, stop: int) -> np.ndarray:
        """Coefficients for exponents ``start <= n < stop`` (zeros below offset)."""
        if stop > self.trunc:
            raise IndexError(f"window up to {stop} exceeds trunc {self.trunc}")
        out = _zeros(max(stop - start, 0), self.modulus)
        lo = max(start, self.offset)
        if lo < stop:
            out[lo - start :] = self.coeffs[lo - self.offset : stop - self.offset]
        return out

    def valuation(self) -> int | None:
        """Smallest exponent with a nonzero stored coefficient, or None."""
        nz = np.flatnonzero(self.coeffs != 0)
        return None if len(nz) == 0 else self.offset + int(nz[0])

    def is_zero(self) -> bool:
        return self.valuation() is None

    def support(self) -> np.ndarray:
        return self.offset + np.flatnonzero(self.coeffs != 0)

    def terms(self) -> list[tuple[int, int]]:
        return [(int(e), self[int(e)]) for e in self.support()]

    def __repr__(self) -> str:
        head = ", ".join(f"{c}q^{e}" for e, c in self.terms()[:6])
        mode = "exact" if self.exact else f"mod {self.modulus.value}"
        return f"QSeries({head or '0'} + O(q^{self.trunc}); {mode})"

    # -- shape changes ----------------------------------------------------

    def truncate(self, trunc: int) -> "QSeries":
        """Forget everything at or above ``trunc`` (never extends)."""
        if trunc > self.trunc:
            raise SeriesError(f"cannot extend trunc {self.trunc} to {trunc}")
        if trunc <= self.offset:
            return QSeries(trunc, _zeros(0, self.modulus), trunc, self.modulus)
        return QSeries(self.offset, self.coeffs[: trunc - self.offset].copy(), trunc, self.modulus)

    def shift(self, s: int) -> "QSeries":
        """Multiply by ``q^s``."""
        return QSeries(self.offset + s, self.coeffs.copy(), self.trunc + s, self.modulus)

    def with_offset(self, offset: int) -> "QSeries":
        """Same series, re-windowed to start at ``offset`` (must not drop terms)."""
        if offset > self.offset:
            drop = self.coeffs[: offset - self.offset]
            if np.any(drop != 0):
                raise SeriesError("re-windowing would drop nonzero coefficients")
        return QSeries(offset, self.window(offset, self.trunc), self.trunc, self.modulus)

    def reduce(self, modulus: Modulus) -> "QSeries":
        """Reduce an exact series, or a residue series modulo a divisor ring."""
        if self.modulus is not None and not modulus.divides(self.modulus):
            raise SeriesError(f"cannot reduce mod {self.modulus.value} to mod {modulus.value}")
        M = modulus.value
        if self.modulus is None:
            arr = np.array([int(c) % M for c in self.coeffs], dtype=np.int64)
        else:
            arr = self.coeffs % M
        return QSeries(self.offset, arr, self.trunc, modulus)

    # -- arithmetic -------------------------------------------------------

    def __add__(self, other):
        if isinstance(other, (int, np.integer)):
            other = QSeries.monomial(0, self.trunc, int(other), self.modulus)
        return series_add(self, other)

    __radd__ = __add__

    def __neg__(self) -> "QSeries":
        return series_scale(self, -1)

    def __sub__(self, other):
        if isinstance(other, (int, np.integer)):
            other = QSeries.monomial(0, self.trunc, int(other), self.modulus)
        return series_add(self, series_scale(other, -1))

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, (int, np.integer)):
            return series_scale(self, int(other))
        return series_mul(self, other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        return series_div(self, other)

    def __pow__(self, e: int) -> "QSeries":
        return series_pow(self, e)

    def __eq__(self, other) -> bool:
        """Equality of coefficients below the common truncation."""
        if not isinstance(other, QSeries):
            return NotImplemented
        if self.modulus != other.modulus:
            return False
        top = min(self.trunc, other.trunc)
        lo = min(self.offset, other.offset, top)
        return bool(np.all(self.window(lo, top) == other.window(lo, top)))

    __hash__ = None  # type: ignore[assignment]


def _zeros(n: int, modulus: Modulus | None) -> np.ndarray:
    if modulus is None:
        out = np.empty(n, dtype=object)
        out[:] = 0
        return out
    return np.zeros(n, dtype=np.int64)


def _check_compatible(a: QSeries, b: QSeries) -> None:
    if a.modulus != b.modulus:
        ma = "exact" if a.modulus is None else a.modulus.value
        mb = "exact" if b.modulus is None else b.modulus.value
        raise SeriesError(f"mode/modulus mismatch: {ma} vs {mb}")


def _normalize(arr: np.ndarray, modulus: Modulus | None) -> np.ndarray:
    if modulus is None:
        return arr
    return np.mod(arr, modulus.value)


def series_add(a: QSeries, b: QSeries) -> QSeries:
    _check_compatible(a, b)
    top = min(a.trunc, b.trunc)
    lo = min(a.offset, b.offset, top)
    arr = a.window(lo, top) + b.window(lo, top)
    return QSeries(lo, _normalize(arr, a.modulus), top, a.modulus)


def series_scale(a: QSeries, c: int) -> QSeries:
    if a.modulus is None:
        return QSeries(a.offset, a.coeffs * int(c), a.trunc, None)
    M = a.modulus.value
    c = int(c) % M
    if M < _kernels.KERNEL_MODULUS_LIMIT:
        arr = (a.coeffs * c) % M
    else:
        arr = np.array([int(x) * c % M for x in a.coeffs], dtype=np.int64)
    return QSeries(a.offset, arr, a.trunc, a.modulus)


# -- convolution ------------------------------------------------------------

_SPARSE_FRACTION = 0.125
_LIMB_BITS = 16


def _convolve_exact(x: np.ndarray, y: np.ndarray, n: int) -> np.ndarray:
    if np.count_nonzero(x) > np.count_nonzero(y):
        x, y = y, x
    out = _zeros(n, None)
    for i in np.flatnonzero(x != 0):
        if i >= n:
            break
        top = min(n - i, len(y))
        out[i : i + top] += x[i] * y[:top]
    return out


def _convolve_big_modulus(x: np.ndarray, y: np.ndarray, n: int, M: int) -> np.ndarray:
    # 16-bit limbs keep every partial convolution inside int64 for n < 2^30.
    mask = (1 << _LIMB_BITS) - 1
    xs = [(x >> (_LIMB_BITS * i)) & mask for i in range(4)]
    ys = [(y >> (_LIMB_BITS * i)) & mask for i in range(4)]
    acc = np.zeros(n, dtype=object)
    for i, xi in enumerate(xs):
        if not xi.any():
            continue
        for j, yj in enumerate(ys):
            if not yj.any():
                continue
            part = np.convolve(xi, yj)[:n]
            weight = pow(2, _LIMB_BITS * (i + j), M)
            acc[: len(part)] += part.astype(object) * weight
    return np.array([int(v) % M for v in acc], dtype=np.int64)


def _convolve_residue(x: np.ndarray, y: np.ndarray, n: int, M: int) -> np.ndarray:
    x, y = x[:n], y[:n]
    if len(x) == 0 or len(y) == 0:
        return np.zeros(n, dtype=np.int64)
    nx, ny = np.count_nonzero(x), np.count_nonzero(y)
    if nx > ny:
        x, y, nx, ny = y, x, ny, nx
    if M < _kernels.KERNEL_MODULUS_LIMIT and nx <= _SPARSE_FRACTION * len(x):
        idx = np.flatnonzero(x).astype(np.int64)
        return _kernels.mul_sparse(y, idx, x[idx], n, M)
    if M * M * min(len(x), len(y)) < MODULUS_BOUND:
        out = np.convolve(x, y)[:n] % M
    else:
        out = _convolve_big_modulus(x, y, n, M)
    if len(out) < n:
        out = np.concatenate([out, np.zeros(n - len(out), dtype=np.int64)])
    return out


def series_mul(a: QSeries, b: QSeries) -> QSeries:
    """Product to the tightest truncation both factors support."""
    _check_compatible(a, b)
    off = a.offset + b.offset
    trunc = min(a.trunc + b.offset, b.trunc + a.offset)
    n = trunc - off
    if n <= 0:
        return QSeries(trunc, _zeros(0, a.modulus), trunc, a.modulus)
    if a.modulus is None:
        arr = _convolve_exact(a.coeffs[:n], b.coeffs[:n], n)
    else:
        arr = _convolve_residue(a.coeffs, b.coeffs, n, a.modulus.value)
    return QSeries(off, arr, trunc, a.modulus)


# -- division ---------------------------------------------------------------


def _unit_part(b: QSeries) -> tuple[int, np.ndarray]:
    v = b.valuation()
    if v is None:
        raise SeriesError("cannot invert a series with no nonzero coefficient below trunc")
    u = b.coeffs[v - b.offset :]
    lead = int(u[0])
    if b.modulus is None:
        if lead not in (1, -1):
            raise SeriesError(f"leading coefficient {lead} is not a unit in Z")
    elif not b.modulus.is_unit(lead):
        raise SeriesError(f"leading coefficient {lead} is not a unit modulo {b.modulus.value}")
    return v, u


def _divide_exact(num: np.ndarray, u: np.ndarray) -> np.ndarray:
    n = len(num)
    lead = int(u[0])
    idx = [int(i) for i in np.flatnonzero(u[1:n] != 0) + 1]
    vals = [int(u[i]) for i in idx]
    out = [0] * n
    for i in range(n):
        acc = int(num[i])
        for g, v in zip(idx, vals):
            if g > i:
                break
            acc -= v * out[i - g]
        out[i] = acc * lead  # lead is +-1
    arr = np.empty(n, dtype=object)
    arr[:] = out
    return arr


def _divide_residue(num: np.ndarray, u: np.ndarray, modulus: Modulus) -> np.ndarray:
    n = len(num)
    M = modulus.value
    lead_inv = modulus.inverse(int(u[0]))
    tail = u[1:n]
    idx = (np.flatnonzero(tail != 0) + 1).astype(np.int64)
    vals = u[idx]
    if M < _kernels.KERNEL_MODULUS_LIMIT:
        num = np.ascontiguousarray(num, dtype=np.int64)
        signed = np.where(vals == 1, 1, np.where(vals == M - 1, -1, 0))
        if lead_inv == 1 and np.all(signed != 0) and len(idx) * M < (1 << 62):
            return _kernels.divide_signed(num, idx, signed.astype(np.int64), M)
        return _kernels.divide_sparse(num, idx, vals, lead_inv, M)
    idx_l = [int(i) for i in idx]
    vals_l = [int(v) for v in vals]
    out = [0] * n
    for i in range(n):
        acc = int(num[i])
        for g, v in zip(idx_l, vals_l):
            if g > i:
                break
            acc -= v * out[i - g]
        out[i] = acc * lead_inv % M
    return np.array(out, dtype=np.int64)


def series_div(a: QSeries, b: QSeries) -> QSeries:
    """``a / b`` where the leading coefficient of ``b`` is a unit."""
    _check_compatible(a, b)
    v, u = _unit_part(b)
    off = a.offset - v
    trunc = min(a.trunc - v, b.trunc - 2 * v + a.offset)
    n = trunc - off
    if n <= 0:
        return QSeries(trunc, _zeros(0, a.modulus), trunc, a.modulus)
    num = a.coeffs[:n]
    if len(u) < n:  # only possible when a.trunc - v > b.trunc - v
        raise SeriesError("divisor window shorter than quotient window")
    u = u[:n]
    if a.modulus is None:
        arr = _divide_exact(num, u)
    else:
        arr = _divide_residue(num, u, a.modulus)
    return QSeries(off, arr, trunc, a.modulus)


def series_inv(a: QSeries) -> QSeries:
    """Multiplicative inverse; valuation ``v`` maps to ``-v`` and the result
    is known up to ``a.trunc - 2v``."""
    v, _ = _unit_part(a)
    one = QSeries.one(a.trunc - v, a.modulus)
    return series_div(one, a)


def series_pow(a: QSeries, e: int) -> QSeries:
    """``a**e`` by binary powering; negative ``e`` inverts first."""
    e = int(e)
    if e < 0:
        return series_pow(series_inv(a), -e)
    v = a.valuation()
    if e == 0:
        top = a.trunc - (v if v is not None else a.offset)
        return QSeries.one(top, a.modulus)
    result: QSeries | None = None
    base = a
    while True:
        if e & 1:
            result = base if result is None else series_mul(result, base)
        e >>= 1
        if not e:
            break
        base = series_mul(base, base)
    assert result is not None
    return result


# -- operators on exponents -------------------------------------------------


def _ceil_div(a: int, b: int) -> int:
    return -((-a) // b)


def op_U(f: QSeries, ell: int) -> QSeries:
    """``sum a(ell*n) q^n``."""
    if ell < 1:
        raise SeriesError(f"U operator needs ell >= 1 (got {ell})")
    if ell == 1:
        return f
    off = _ceil_div(f.offset, ell)
    trunc = _ceil_div(f.trunc, ell)
    start = off * ell - f.offset
    arr = f.coeffs[start::ell][: max(trunc - off, 0)].copy()
    return QSeries(off, arr, trunc, f.modulus)


def op_V(f: QSeries, ell: int) -> QSeries:
    """``sum a(n) q^(ell*n)``."""
    if ell < 1:
        raise SeriesError(f"V operator needs ell >= 1 (got {ell})")
    if ell == 1:
        return f
    off, trunc = f.offset * ell, f.trunc * ell
    arr = _zeros(trunc - off, f.modulus)
    arr[::ell] = f.coeffs
    return QSeries(off, arr, trunc, f.modulus)


def op_twist(f: QSeries, psi: QuadChar | Callable[[int], int]) -> QSeries:
    """Multiply the coefficient of ``q^n`` by ``psi(n)``."""
    if isinstance(psi, QuadChar):
        vals = psi.values(f.offset, f.trunc)
    else:
        vals = np.array([psi(n) for n in range(f.offset, f.trunc)], dtype=np.int64)
    if f.modulus is None:
        arr = f.coeffs * vals.astype(object)
    else:
        arr = np.mod(f.coeffs * vals, f.modulus.value)
    return QSeries(f.offset, arr, f.trunc, f.modulus)

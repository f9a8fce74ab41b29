"""Independent ground truth for partition numbers and congruence checks.

Nothing here calls the series module.  Exact values come from the
pentagonal recurrence over Python integers; residue values come from a
separate push-style kernel that divides by Jacobi's cube
``prod(1 - q^n)^3 = sum (-1)^j (2j + 1) q^{j(j+1)/2}`` before falling back to
the pentagonal series.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numba
import numpy as np

EXACT_INDEX_CAP = 100_000
DEFAULT_RESIDUE_BUDGET = 2_000_000


class OracleBudgetError(RuntimeError):
    """The requested verification needs coefficients past the configured budget."""


@dataclass(frozen=True)
class ExactSeries:
    """``values[n]`` for ``0 <= n < len``, as Python integers."""

    values: tuple[int, ...]

    def __len__(self) -> int:
        return len(self.values)

    def __getitem__(self, n):
        return self.values[n]

    def reduce(self, modulus: int) -> list[int]:
        return [v % modulus for v in self.values]


# ---------------------------------------------------------------------------
# Exact values


def _pentagonal_pairs(N: int) -> list[tuple[int, int, int]]:
    """``(sign, g1, g2)`` for ``j >= 1`` with ``g1 = j(3j-1)/2 < N``."""
    out = []
    j = 1
    while j * (3 * j - 1) // 2 < N:
        out.append((1 if j % 2 else -1, j * (3 * j - 1) // 2, j * (3 * j + 1) // 2))
        j += 1
    return out


def exact_partition(N: int) -> ExactSeries:
    """``p(0), ..., p(N-1)`` by Euler's recurrence."""
    if N < 1:
        raise ValueError(f"N must be >= 1 (got {N})")
    pairs = _pentagonal_pairs(N)
    p = [0] * N
    p[0] = 1
    for n in range(1, N):
        s = 0
        for sign, g1, g2 in pairs:
            if g1 > n:
                break
            t = p[n - g1]
            if g2 <= n:
                t += p[n - g2]
            s += t if sign > 0 else -t
        p[n] = s
    return ExactSeries(tuple(p))


def exact_p_r(r: int, N: int) -> ExactSeries:
    """``p_r(0), ..., p_r(N-1)``: ``r`` successive exact divisions by ``prod(1 - q^n)``."""
    if r < 1:
        raise ValueError(f"r must be >= 1 (got {r})")
    if N < 1:
        raise ValueError(f"N must be >= 1 (got {N})")
    pairs = _pentagonal_pairs(N)
    cur = [1] + [0] * (N - 1)
    for _ in range(r):
        nxt = [0] * N
        for n in range(N):
            s = cur[n]
            for sign, g1, g2 in pairs:
                if g1 > n:
                    break
                t = nxt[n - g1]
                if g2 <= n:
                    t += nxt[n - g2]
                s += t if sign > 0 else -t
            nxt[n] = s
        cur = nxt
    return ExactSeries(tuple(cur))


def convolution_power(base: ExactSeries, r: int) -> ExactSeries:
    """Coefficientwise ``r``-fold self-convolution (slow reference)."""
    N = len(base)
    out = [1] + [0] * (N - 1)
    for _ in range(r):
        out = [sum(out[i] * base[n - i] for i in range(n + 1)) for n in range(N)]
    return ExactSeries(tuple(out))


# ---------------------------------------------------------------------------
# Residue values


@numba.njit(cache=True)
def _push_divide(acc, exps, coeffs, M, lazy):  # pragma: no cover - compiled
    # acc holds the numerator; on exit it holds numerator / D with D[0] = 1.
    # With ``lazy`` the pending sums cannot overflow, so reduce only on read.
    n_total = acc.shape[0]
    for n in range(n_total):
        v = acc[n] % M
        if v < 0:
            v += M
        acc[n] = v
        if v == 0:
            continue
        for t in range(exps.shape[0]):
            j = n + exps[t]
            if j >= n_total:
                break
            if lazy:
                acc[j] -= coeffs[t] * v
            else:
                acc[j] = (acc[j] - coeffs[t] * v) % M


def _jacobi_cube(N: int, M: int) -> tuple[np.ndarray, np.ndarray]:
    exps, cs = [], []
    j = 1
    while j * (j + 1) // 2 < N:
        exps.append(j * (j + 1) // 2)
        cs.append(((-1) ** j * (2 * j + 1)) % M)
        j += 1
    return np.array(exps, dtype=np.int64), np.array(cs, dtype=np.int64)


def _euler_terms(N: int, M: int) -> tuple[np.ndarray, np.ndarray]:
    exps, cs = [], []
    for sign, g1, g2 in _pentagonal_pairs(N):
        c = (-sign) % M  # coefficient of q^g in prod(1 - q^n) is -sign
        exps.append(g1)
        cs.append(c)
        if g2 < N:
            exps.append(g2)
            cs.append(c)
    return np.array(exps, dtype=np.int64), np.array(cs, dtype=np.int64)


def residue_p_r(r: int, N: int, modulus: int) -> np.ndarray:
    """``p_r(n) mod modulus`` for ``n < N`` as an int64 array."""
    if r < 1 or N < 1:
        raise ValueError("need r >= 1 and N >= 1")
    if modulus < 2 or modulus >= 1 << 31:
        raise ValueError("modulus must lie in [2, 2^31)")
    acc = np.zeros(N, dtype=np.int64)
    acc[0] = 1
    cube = _jacobi_cube(N, modulus)
    euler = _euler_terms(N, modulus)
    for exps, cs, times in ((*cube, r // 3), (*euler, r % 3)):
        lazy = modulus * modulus * (len(exps) + 1) < 1 << 62
        for _ in range(times):
            _push_divide(acc, exps, cs, modulus, lazy)
    return acc


# ---------------------------------------------------------------------------
# Reports


@dataclass
class OracleReport:
    description: str
    modulus: int
    checked: int = 0
    counterexample: tuple[int, int, int] | None = None  # (n, index, residue)
    max_index: int = 0
    indices: list[int] = field(default_factory=list, repr=False)

    @property
    def ok(self) -> bool:
        return self.counterexample is None

    def summary(self) -> str:
        if self.ok:
            return f"{self.description}: holds for {self.checked} values (max index {self.max_index})"
        n, idx, v = self.counterexample
        return f"{self.description}: counterexample n={n} (index {idx}, residue {v} mod {self.modulus})"

    def to_dict(self) -> dict:
        return {
            "description": self.description,
            "modulus": self.modulus,
            "ok": self.ok,
            "checked": self.checked,
            "max_index": self.max_index,
            "counterexample": (
                None if self.counterexample is None
                else dict(zip(("n", "index", "residue"), self.counterexample))
            ),
        }


def verify_progression(A: int, B: int, M: int, r: int, n_max: int) -> OracleReport:
    """Check ``p_r(A n + B) = 0 (mod M)`` for ``0 <= n <= n_max`` exactly."""
    if A < 1 or not 0 <= B < A:
        raise ValueError(f"need A >= 1 and 0 <= B < A (got A={A}, B={B})")
    top = A * n_max + B
    if top >= EXACT_INDEX_CAP:
        raise OracleBudgetError(f"index {top} exceeds exact cap {EXACT_INDEX_CAP}")
    vals = exact_p_r(r, top + 1)
    rep = OracleReport(f"p_{r}({A}n+{B}) ≡ 0 (mod {M}), 0 ≤ n ≤ {n_max}", M, max_index=top)
    for n in range(n_max + 1):
        idx = A * n + B
        rep.checked += 1
        if vals[idx] % M:
            rep.counterexample = (n, idx, vals[idx] % M)
            break
    return rep


def hecke_indices(mk: int, r: int, ell: int, e: int, n_max: int, n_min: int = 1) -> list[tuple[int, int]]:
    """``(n, (mk ell^e n + r)/24)`` for admissible ``n_min <= n <= n_max`` with ell not dividing n."""
    out = []
    base = mk * ell**e
    for n in range(n_min, n_max + 1):
        if n % ell == 0:
            continue
        num = base * n + r
        if num % 24 == 0:
            out.append((n, num // 24))
    return out


def verify_hecke_instance(
    params, ell: int, e: int, n_max: int, budget: int = DEFAULT_RESIDUE_BUDGET
) -> OracleReport:
    """Check ``p_r((m^k ell^e n + r)/24) = 0 (mod m^k)`` for admissible ``1 <= n <= n_max``."""
    mk, r = params.mk, params.r
    pairs = hecke_indices(mk, r, ell, e, n_max)
    rep = OracleReport(f"p_{r}(({mk}·{ell}^{e}·n+{r})/24) ≡ 0 (mod {mk}), {ell}∤n, n ≤ {n_max}", mk)
    if not pairs:
        return rep
    top = pairs[-1][1]
    if top >= budget:
        raise OracleBudgetError(f"largest index {top} exceeds budget {budget}")
    vals = residue_p_r(r, top + 1, mk)
    rep.max_index = top
    for n, idx in pairs:
        rep.checked += 1
        rep.indices.append(idx)
        if vals[idx]:
            rep.counterexample = (n, idx, int(vals[idx]))
            break
    return rep


def verify_hecke_periodicity(
    params, ell: int, i: int, period: int, n_max: int, budget: int = DEFAULT_RESIDUE_BUDGET
) -> OracleReport:
    """Check ``p_r((m^k ell^i n + r)/24) = p_r((m^k ell^(i+period) n + r)/24)`` for ``n <= n_max``.

    The report's counterexample residue is the difference of the two values.
    """
    mk, r = params.mk, params.r
    hi_base = mk * ell ** (i + period)
    rep = OracleReport(
        f"p_{r}(({mk}·{ell}^{i}·n+{r})/24) ≡ p_{r}(({mk}·{ell}^{i + period}·n+{r})/24) (mod {mk}), n ≤ {n_max}",
        mk,
    )
    pairs = []
    for n in range(n_max + 1):
        a, b = mk * ell**i * n + r, hi_base * n + r
        if a % 24 == 0 and b % 24 == 0:
            pairs.append((n, a // 24, b // 24))
    if not pairs:
        return rep
    top = max(p[2] for p in pairs)
    if top >= budget:
        raise OracleBudgetError(f"largest index {top} exceeds budget {budget}")
    vals = residue_p_r(r, top + 1, mk)
    rep.max_index = top
    for n, a, b in pairs:
        rep.checked += 1
        diff = int((vals[a] - vals[b]) % mk)
        if diff:
            rep.counterexample = (n, b, diff)
            break
    return rep

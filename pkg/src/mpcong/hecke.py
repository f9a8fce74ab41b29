"""Hecke operators T_{ell^2} on S_{gamma,lam} modulo m^k and the orders they induce.

For odd ``r < m^k`` the space ``S_{gamma,lam}`` spanned by
``eta(24z)^gamma phi(24z)`` is stable under ``T_{ell^2}`` for primes
``ell`` other than 2, 3.  Writing ``(f_i) | T = A (f_i)`` and

    X = [[A, I], [-ell^(gamma + 2 lam - 2) I, 0]]

the minimal ``K`` with ``X^K`` scalar and the minimal ``M`` with ``X^M = I``
yield congruences along ``ell``-power progressions.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .certificates import CongruenceCertificate, VerificationRecord
from .congruence import IdentityCheck, IdentityFailure, MultipartitionParams, solve_phi
from .forms import EchelonBasis, basis_S
from .series import QSeries, SeriesError, is_prime, kronecker, op_twist, op_U, op_V, QuadChar

DEFAULT_ORDER_CAP = 10**6
#: Oracle spot checks are attempted when the largest index stays below this.
ORACLE_INDEX_BUDGET = 500_000


class HypothesisError(ValueError):
    """The Hecke invariance hypotheses do not hold for the requested system."""

    def __init__(self, hypothesis: str, message: str):
        super().__init__(f"hypothesis violated ({hypothesis}): {message}")
        self.hypothesis = hypothesis


class OrderCapExceeded(RuntimeError):
    """No order was found below the configured cap."""


# ---------------------------------------------------------------------------
# Matrices over Z/m^k


@dataclass(frozen=True, eq=False)
class MatrixModMk:
    entries: np.ndarray
    modulus: int

    def __post_init__(self) -> None:
        e = np.asarray(self.entries)
        if e.ndim != 2 or e.shape[0] != e.shape[1]:
            raise ValueError(f"matrix must be square (got shape {e.shape})")
        if self._small:
            e = np.mod(e.astype(np.int64), self.modulus)
        else:
            e = np.vectorize(lambda x: int(x) % self.modulus, otypes=[object])(e)
        e.setflags(write=False)
        object.__setattr__(self, "entries", e)

    @property
    def _small(self) -> bool:
        return self.modulus * self.modulus * max(len(self.entries), 1) < (1 << 62)

    @classmethod
    def identity(cls, n: int, modulus: int) -> "MatrixModMk":
        return cls(np.eye(n, dtype=np.int64), modulus)

    @classmethod
    def scalar_matrix(cls, n: int, c: int, modulus: int) -> "MatrixModMk":
        return cls(np.eye(n, dtype=np.int64) * (int(c) % modulus), modulus)

    @property
    def n(self) -> int:
        return self.entries.shape[0]

    def __matmul__(self, other: "MatrixModMk") -> "MatrixModMk":
        if self.modulus != other.modulus:
            raise ValueError("modulus mismatch")
        if self._small:
            return MatrixModMk(self.entries @ other.entries % self.modulus, self.modulus)
        prod = self.entries.astype(object).dot(other.entries.astype(object))
        return MatrixModMk(prod, self.modulus)

    def __pow__(self, e: int) -> "MatrixModMk":
        if e < 0:
            raise ValueError("negative matrix powers are not supported")
        result = MatrixModMk.identity(self.n, self.modulus)
        base = self
        while e:
            if e & 1:
                result = result @ base
            base = base @ base
            e >>= 1
        return result

    def __eq__(self, other) -> bool:
        if not isinstance(other, MatrixModMk):
            return NotImplemented
        return self.modulus == other.modulus and bool(np.all(self.entries == other.entries))

    __hash__ = None  # type: ignore[assignment]

    def reduce(self, modulus: int) -> "MatrixModMk":
        if self.modulus % modulus:
            raise ValueError(f"{modulus} does not divide {self.modulus}")
        return MatrixModMk(self.entries, modulus)

    def scalar_value(self) -> int | None:
        """``c`` if the matrix is ``c I``, else None."""
        e = self.entries
        c = e[0, 0]
        if np.all(e == np.eye(self.n, dtype=np.int64) * c):
            return int(c)
        return None

    def is_identity(self) -> bool:
        return self.scalar_value() == 1 % self.modulus

    def block(self, rows: slice, cols: slice) -> "MatrixModMk":
        return MatrixModMk(self.entries[rows, cols], self.modulus)

    def det_mod_prime(self, p: int) -> int:
        """Determinant modulo the prime ``p`` dividing the modulus."""
        a = [[int(x) % p for x in row] for row in self.entries]
        n = len(a)
        det = 1
        for col in range(n):
            piv = next((i for i in range(col, n) if a[i][col]), None)
            if piv is None:
                return 0
            if piv != col:
                a[col], a[piv] = a[piv], a[col]
                det = -det
            det = det * a[col][col] % p
            inv = pow(a[col][col], -1, p)
            for i in range(col + 1, n):
                f = a[i][col] * inv % p
                if f:
                    a[i] = [(x - f * y) % p for x, y in zip(a[i], a[col])]
        return det % p

    def tolist(self) -> list[list[int]]:
        return [[int(x) for x in row] for row in self.entries]


# ---------------------------------------------------------------------------
# The operator


def half_integral_lambda(params: MultipartitionParams) -> int:
    """``lam_h`` with ``lam_h + 1/2 = lam + gamma/2`` (``gamma`` odd)."""
    return params.lam + (params.gamma - 1) // 2


def hecke_T(f: QSeries, ell: int, lam_h: int) -> QSeries:
    """``T_{ell^2}`` in weight ``lam_h + 1/2`` with character ``chi_12``.

    ``b(n) = a(ell^2 n) + chi12(ell) ((-1)^lam_h n / ell) ell^(lam_h - 1) a(n)
    + ell^(2 lam_h - 1) a(n / ell^2)``.
    """
    if f.modulus is None:
        raise SeriesError("hecke_T works on residue-mode series")
    if not is_prime(ell) or ell in (2, 3) or f.modulus.m == ell:
        raise HypothesisError("ell prime, ell not in {2, 3, m}", f"ell={ell}")
    if lam_h < 1:
        raise SeriesError(f"lam_h must be positive (got {lam_h})")
    M = f.modulus.value
    l2 = ell * ell
    out_trunc = -(-f.trunc // l2)
    lo = min(-(-f.offset // l2), f.offset, f.offset * l2)
    if out_trunc <= lo:
        raise SeriesError(f"trunc {f.trunc} too small for ell^2 = {l2}")
    n = np.arange(lo, out_trunc, dtype=np.int64)
    first = op_U(f, l2).window(lo, out_trunc)
    mid_scale = kronecker(12, ell) * pow(ell, lam_h - 1, M) % M
    psi = QuadChar.signed_legendre(ell, lam_h).values(lo, out_trunc)
    mid = f.window(lo, out_trunc) * (psi % M) % M * mid_scale % M
    last = np.zeros(len(n), dtype=np.int64)
    divisible = n % l2 == 0
    src = n[divisible] // l2
    inside = src >= f.offset
    sel = np.flatnonzero(divisible)[inside]
    last[sel] = f.coeffs[src[inside] - f.offset]
    last = last * pow(ell, 2 * lam_h - 1, M) % M
    return QSeries(lo, (first + mid + last) % M, out_trunc, f.modulus)


# ---------------------------------------------------------------------------
# Systems


def check_hypotheses(params: MultipartitionParams, ell: int) -> None:
    if params.r % 2 == 0:
        raise HypothesisError("r odd", f"r={params.r} is even")
    if params.r >= params.mk:
        raise HypothesisError("r < m^k", f"r={params.r} >= {params.mk}")
    if not is_prime(ell) or ell in (2, 3, params.m):
        raise HypothesisError("ell prime, ell not in {2, 3, m}", f"ell={ell}")
    # both facts follow from the two checks above
    assert params.gamma % 2 == 1 and 0 < params.gamma < 24
    if params.lam < 0:
        raise HypothesisError("lam >= 0", f"lam={params.lam}")


def required_trunc(params: MultipartitionParams, ell: int) -> int:
    """Basis truncation needed for ``hecke_matrix``: ``ell^2 (gamma + 24 d) + 24``."""
    return ell * ell * (params.gamma + 24 * params.dim) + 24


def hecke_matrix(
    params: MultipartitionParams,
    ell: int,
    N: int | None = None,
    basis: EchelonBasis | None = None,
    reduced: bool = False,
) -> tuple[MatrixModMk, EchelonBasis, int]:
    """Matrix ``A`` with ``(f_i) | T_{ell^2} = A (f_i)``; row ``i`` holds the
    coordinates of ``f_i | T``.

    By default the basis is the monomial one ``eta^gamma E4^a E6^b Delta^j``
    (at ``24z``).  Every row's residual is checked to vanish to
    ``ceil(N/ell^2)``.  Returns ``(A, basis, verified_trunc)``.
    """
    check_hypotheses(params, ell)
    need = required_trunc(params, ell)
    if N is None:
        N = need
    if N < need:
        raise SeriesError(f"hecke_matrix needs N >= {need} (got {N})")
    if basis is None:
        basis = basis_S(params.gamma, params.lam, N, params.modulus, reduced=reduced)
    lam_h = half_integral_lambda(params)
    rows = []
    verified = None
    for i, f in enumerate(basis.elements):
        img = hecke_T(f, ell, lam_h)
        coords, resid = basis.residual(img)
        v = resid.valuation()
        if v is not None:
            raise IdentityFailure(f"f_{i}|T_{ell}^2 leaves the basis span at q^{v}", v)
        verified = resid.trunc if verified is None else min(verified, resid.trunc)
        rows.append(coords)
    return MatrixModMk(np.array(rows, dtype=np.int64), params.mk), basis, int(verified)


def scalar_exponent(params: MultipartitionParams) -> int:
    """``gamma + 2 lam - 2`` (equals ``2 lam_h - 1``)."""
    return params.gamma + 2 * params.lam - 2


def build_X(A: MatrixModMk, ell: int, gamma: int, lam: int) -> MatrixModMk:
    """``[[A, I], [-ell^(gamma + 2 lam - 2) I, 0]]`` modulo the modulus of ``A``."""
    d, M = A.n, A.modulus
    s = (-pow(ell, gamma + 2 * lam - 2, M)) % M
    X = np.zeros((2 * d, 2 * d), dtype=np.int64 if A._small else object)
    X[:d, :d] = A.entries
    X[:d, d:] = np.eye(d, dtype=np.int64)
    X[d:, :d] = np.eye(d, dtype=np.int64) * s
    return MatrixModMk(X, M)


def _prime_of(modulus: int) -> tuple[int, int]:
    for p in range(2, int(modulus**0.5) + 2):
        if modulus % p == 0:
            k = 0
            while modulus % p == 0:
                modulus //= p
                k += 1
            if modulus != 1:
                raise ValueError("modulus is not a prime power")
            return p, k
    return modulus, 1


def _first_power(X: MatrixModMk, predicate, cap: int) -> tuple[int, MatrixModMk]:
    Y = X
    t = 1
    while not predicate(Y):
        t += 1
        if t > cap:
            raise OrderCapExceeded(f"no exponent <= {cap} found (order cap)")
        Y = Y @ X
    return t, Y


def _lift(X: MatrixModMk, t1: int, m: int, predicate, cap: int) -> tuple[int, MatrixModMk]:
    Z = X ** t1
    t = t1
    while not predicate(Z):
        t *= m
        if t > cap:
            raise OrderCapExceeded(f"order exceeds cap {cap}")
        Z = Z ** m
    return t, Z


def projective_order(X: MatrixModMk, cap: int = DEFAULT_ORDER_CAP) -> tuple[int, int]:
    """Minimal ``K >= 1`` with ``X^K = c I``; returns ``(K, c)``.

    The order modulo ``m`` is found by iteration, then lifted by powers of
    ``m`` (the kernel of reduction is an ``m``-group).
    """
    m, _ = _prime_of(X.modulus)
    if X.det_mod_prime(m) == 0:
        raise ValueError("X is not invertible modulo m")
    t1, _ = _first_power(X.reduce(m), lambda Y: Y.scalar_value() is not None, cap)
    K, Z = _lift(X, t1, m, lambda Y: Y.scalar_value() is not None, cap)
    return K, int(Z.scalar_value())


def full_order(X: MatrixModMk, cap: int = DEFAULT_ORDER_CAP) -> int:
    """Minimal ``M >= 1`` with ``X^M = I``."""
    m, _ = _prime_of(X.modulus)
    if X.det_mod_prime(m) == 0:
        raise ValueError("X is not invertible modulo m")
    t1, _ = _first_power(X.reduce(m), MatrixModMk.is_identity, cap)
    M, _ = _lift(X, t1, m, MatrixModMk.is_identity, cap)
    return M


def blind_order(X: MatrixModMk, scalar: bool, cap: int = DEFAULT_ORDER_CAP) -> int:
    """Reference search by plain iteration modulo ``m^k`` (for testing)."""
    pred = (lambda Y: Y.scalar_value() is not None) if scalar else MatrixModMk.is_identity
    return _first_power(X, pred, cap)[0]


# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class HeckeSystem:
    params: MultipartitionParams
    ell: int
    basis: EchelonBasis
    A: MatrixModMk
    X: MatrixModMk
    K: int
    c: int
    M_order: int
    verified_to: int
    phi_coords: tuple[int, ...] = field(default=())

    @property
    def lam_h(self) -> int:
        return half_integral_lambda(self.params)

    @property
    def d(self) -> int:
        return self.A.n

    @classmethod
    def build(
        cls,
        params: MultipartitionParams,
        ell: int,
        N: int | None = None,
        reduced: bool = False,
        cap: int = DEFAULT_ORDER_CAP,
    ) -> "HeckeSystem":
        A, basis, verified = hecke_matrix(params, ell, N, reduced=reduced)
        X = build_X(A, ell, params.gamma, params.lam)
        K, c = projective_order(X, cap)
        M = full_order(X, cap)
        phi = solve_phi(params)
        return cls(params, ell, basis, A, X, K, c, M, verified, phi.coords)

    def A_s(self, s: int) -> tuple[MatrixModMk, MatrixModMk]:
        """``(A_s, A_{s-1})`` from ``(I 0) X^s``."""
        Xs = self.X ** s
        d = self.d
        return Xs.block(slice(0, d), slice(0, d)), Xs.block(slice(0, d), slice(d, 2 * d))

    def eigenvalue(self) -> int | None:
        """``a_ell`` when the space is one-dimensional."""
        return int(self.A.entries[0, 0]) if self.d == 1 else None

    def as_dict(self) -> dict:
        return {
            "m": self.params.m, "k": self.params.k, "r": self.params.r,
            "ell": self.ell, "gamma": self.params.gamma, "lambda": self.params.lam,
            "lambda_h": self.lam_h, "d": self.d,
            "basis": "miller" if self.basis.reduced else "monomial",
            "monomials": [m.label() for m in self.basis.monomials],
            "A": self.A.tolist(), "K": self.K, "c": self.c, "M": self.M_order,
            "verified_to": self.verified_to,
        }


def check_Us_recursion(sys: HeckeSystem, s: int, N: int) -> IdentityCheck:
    """Check ``f|U_{ell^2}^s = A_s f + B_s g + C_s f|V_{ell^2}`` with ``g = f ⊗ (·/ell)``.

    ``N`` is the truncation of the basis series used on the left; the check
    runs to ``ceil(N / ell^(2s))``.
    """
    p, ell = sys.params, sys.ell
    M = p.mk
    mod = p.modulus
    basis = basis_S(p.gamma, p.lam, N, mod, reduced=sys.basis.reduced)
    fs = basis.elements
    out_trunc = -(-N // ell ** (2 * s))
    As, As1 = sys.A_s(s)
    eps = kronecker((-1) ** ((p.gamma - 1) // 2) * 12, ell)
    b_scale = (-eps * pow(ell, p.lam + (p.gamma - 3) // 2, M)) % M
    c_scale = (-pow(ell, scalar_exponent(p), M)) % M
    gs = [op_twist(f, QuadChar.legendre(ell)).truncate(out_trunc) for f in fs]
    fv = [op_V(f.truncate(-(-out_trunc // (ell * ell))), ell * ell).truncate(out_trunc) for f in fs]
    ft = [f.truncate(out_trunc) for f in fs]
    for i, f in enumerate(fs):
        lhs = op_U(f, ell ** (2 * s))
        rhs = QSeries.zero(out_trunc, mod)
        for j in range(sys.d):
            a = int(As.entries[i, j])
            b = int(As1.entries[i, j]) * b_scale % M
            c = int(As1.entries[i, j]) * c_scale % M
            if a:
                rhs = rhs + ft[j] * a
            if b:
                rhs = rhs + gs[j] * b
            if c:
                rhs = rhs + fv[j] * c
        top = min(lhs.trunc, rhs.trunc)
        diff = (lhs - rhs).truncate(top)
        v = diff.valuation()
        if v is not None:
            return IdentityCheck(False, top, v, f"row {i}: first difference at q^{v}")
    return IdentityCheck(True, out_trunc, None, f"U_{ell}^2s recursion, s={s}")


def certify(
    sys: HeckeSystem,
    oracle_n_max: int = 50,
    index_budget: int = ORACLE_INDEX_BUDGET,
) -> list[CongruenceCertificate]:
    """The vanishing certificate (exponents ``2 mu K - 1``) and the periodicity
    certificate (period ``2M``), each with its matrix-level checks and, when
    the indices are small enough, an oracle spot check at ``mu = 1``."""
    p = sys.params
    d = sys.d
    closure = VerificationRecord(
        "hecke-closure", True, truncation=sys.verified_to,
        detail=f"f_i|T_{sys.ell}^2 in span of {d} basis forms (residual 0 below q^{sys.verified_to})",
    )
    A_K1, _ = sys.A_s(sys.K - 1)
    vanish_ok = bool(np.all(A_K1.entries == 0))
    XK = sys.X ** sys.K
    vanish = CongruenceCertificate(
        "hecke-vanishing", p.m, p.k, p.r, p.beta, sys.ell, sys.K, sys.c,
        (
            closure,
            VerificationRecord(
                "matrix", vanish_ok and XK.scalar_value() == sys.c,
                detail=f"X^{sys.K} = {sys.c}·I and A_(K-1) = 0 (mod {p.mk})",
            ),
        ),
    )
    XM = sys.X ** sys.M_order
    period = CongruenceCertificate(
        "hecke-periodicity", p.m, p.k, p.r, p.beta, sys.ell, sys.M_order, 1,
        (
            closure,
            VerificationRecord(
                "matrix", XM.is_identity(), detail=f"X^{sys.M_order} = I (mod {p.mk})"
            ),
        ),
    )
    from .oracle import OracleBudgetError, verify_hecke_instance, verify_hecke_periodicity

    try:
        rep = verify_hecke_instance(p, sys.ell, 2 * sys.K - 1, oracle_n_max, budget=index_budget)
        vanish = vanish.with_record(
            VerificationRecord("oracle-residue", rep.ok, oracle_range=(1, oracle_n_max), detail=rep.summary())
        )
    except OracleBudgetError:
        pass
    try:
        rep = verify_hecke_periodicity(p, sys.ell, 0, 2 * sys.M_order, oracle_n_max, budget=index_budget)
        period = period.with_record(
            VerificationRecord("oracle-residue", rep.ok, oracle_range=(0, oracle_n_max), detail=rep.summary())
        )
    except OracleBudgetError:
        pass
    return [vanish, period]

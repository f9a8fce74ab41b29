"""Generating functions of p_r along progressions and their level-one shape.

For a prime ``m >= 5`` and ``k, r >= 1`` let ``beta`` be the residue of
``r/24`` modulo ``m^k`` and ``gamma = (24 beta - r)/m^k``.  The series

    F(q) = sum_t p_r(m^k t + beta) q^(24 t + gamma)

is congruent modulo ``m^k`` to ``eta(24z)^gamma phi(24z)`` for a level-one
form ``phi`` of weight ``lam``.  This module computes ``F``, solves for
``phi`` in a Miller basis and checks the identities around it.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property

import numpy as np

from .certificates import CongruenceCertificate, VerificationRecord
from .forms import (
    EchelonBasis,
    canonical_monomials,
    dim_M,
    echelon_basis_M,
    eisenstein,
    delta,
    eta24_pow,
    eta_quotient_f,
    euler_power,
    partition_r_series,
)
from .series import Modulus, QSeries, SeriesError, is_prime, op_U, op_V, series_div, series_mul

#: Extra contracted coefficients checked beyond the ``dim M_lam`` needed to solve.
SAFETY_WINDOW = 12
#: Index of Gamma_0(576) in SL2(Z).
GAMMA0_576_INDEX = 1152


class ParameterError(ValueError):
    """Invalid ``(m, k, r)`` triple."""


class InsufficientTruncation(ValueError):
    """The requested truncation cannot support the operation."""


class IdentityFailure(AssertionError):
    """A coefficient identity that must hold does not (implementation bug or bad input)."""

    def __init__(self, message: str, exponent: int | None = None):
        super().__init__(message)
        self.exponent = exponent


@dataclass(frozen=True)
class MultipartitionParams:
    m: int
    k: int
    r: int
    beta: int
    gamma: int
    lam: int
    w: int

    @property
    def mk(self) -> int:
        return self.m**self.k

    @property
    def modulus(self) -> Modulus:
        return Modulus(self.m, self.k)

    @property
    def c_k(self) -> int:
        return 1 if self.k % 2 else 2

    @property
    def dim(self) -> int:
        return dim_M(self.lam)

    @property
    def weight_F(self) -> Fraction:
        """Weight ``lam + gamma/2`` of ``eta(24z)^gamma phi(24z)``."""
        return Fraction(2 * self.lam + self.gamma, 2)

    @property
    def delta_power(self) -> int:
        """``(m^k r + gamma)/24``, the valuation of ``f | U_{m^k}``."""
        return (self.mk * self.r + self.gamma) // 24

    def as_dict(self) -> dict:
        return {
            "m": self.m, "k": self.k, "r": self.r, "modulus": self.mk,
            "beta": self.beta, "gamma": self.gamma, "lambda": self.lam,
            "w": self.w, "c_k": self.c_k, "dim": self.dim,
            "sturm_bound": sturm_bound(self),
        }


def derive_params(m: int, k: int, r: int) -> MultipartitionParams:
    """Compute ``beta, gamma, lam, w`` for the triple ``(m, k, r)``."""
    for name, val in (("m", m), ("k", k), ("r", r)):
        if not isinstance(val, (int, np.integer)) or isinstance(val, bool):
            raise ParameterError(f"{name} must be an integer (got {val!r})")
    m, k, r = int(m), int(k), int(r)
    if m < 5 or not is_prime(m):
        raise ParameterError(f"m must be a prime ≥ 5 (got {m})")
    if k < 1:
        raise ParameterError(f"k must be a positive integer (got {k})")
    if r < 1:
        raise ParameterError(f"r must be a positive integer (got {r})")
    try:
        Modulus(m, k)
    except SeriesError as exc:
        raise ParameterError(str(exc)) from exc
    mk = m**k
    beta = r * pow(24, -1, mk) % mk
    gamma, rem = divmod(24 * beta - r, mk)
    assert rem == 0
    phi_mk = mk - mk // m
    if k % 2:
        lam = phi_mk * r // 2 - (gamma + r) // 2
        w = (2 * mk - mk // m - 1) * r // 2
    else:
        lam = phi_mk * r - (gamma + r) // 2
        w = (3 * mk - 2 * (mk // m) - 1) * r // 2
    return MultipartitionParams(m, k, r, beta, gamma, lam, w)


def sturm_bound(params: MultipartitionParams) -> int:
    """Exponent of ``q`` up to which agreement in weight ``lam + gamma/2`` on
    Gamma_0(576) forces equality: ``ceil(weight * 1152 / 12)``."""
    num = params.weight_F * GAMMA0_576_INDEX / 12
    return max(int(-(-num.numerator // num.denominator)), 0)


def default_trunc(params: MultipartitionParams, window: int = SAFETY_WINDOW) -> int:
    """Smallest truncation ``solve_phi`` accepts with the given window."""
    return params.gamma + 24 * (max(params.dim, 1) + window)


# ---------------------------------------------------------------------------
# F and its contraction


def progression_series(
    params: MultipartitionParams, T: int, modulus: Modulus | None | str = "default"
) -> QSeries:
    """``sum_{t < T} p_r(m^k t + beta) q^t`` (``F`` with ``q^24 -> q``, unshifted)."""
    mod = params.modulus if modulus == "default" else modulus
    if T < 1:
        return QSeries.zero(T, mod)
    top = params.mk * (T - 1) + params.beta + 1
    p = partition_r_series(params.r, top, mod)
    return QSeries(0, p.coeffs[params.beta :: params.mk][:T].copy(), T, mod)


def compute_F(
    params: MultipartitionParams, N: int, modulus: Modulus | None | str = "default"
) -> QSeries:
    """``F = sum_t p_r(m^k t + beta) q^(24t + gamma)`` for exponents ``< N``."""
    if N <= params.gamma:
        raise InsufficientTruncation(f"N={N} must exceed gamma={params.gamma}")
    T = -((params.gamma - N) // 24)
    return op_V(progression_series(params, T, modulus), 24).shift(params.gamma).truncate(N)


def contracted_quotient(
    params: MultipartitionParams, T: int, modulus: Modulus | None | str = "default"
) -> QSeries:
    """``F / eta(24z)^gamma`` contracted by ``q^24 -> q``, to ``q^T``."""
    mod = params.modulus if modulus == "default" else modulus
    prog = progression_series(params, T, mod)
    return series_mul(prog, euler_power(-params.gamma, T, mod))


# ---------------------------------------------------------------------------
# phi


@dataclass(frozen=True, eq=False)
class PhiExpression:
    """Coordinates of ``phi`` in the Miller basis of ``M_lam`` modulo ``m^k``."""

    params: MultipartitionParams
    coords: tuple[int, ...]
    verified_to: int
    sturm_grade: bool
    _psi: QSeries = field(repr=False)

    @property
    def weight(self) -> int:
        return self.params.lam

    def is_zero(self) -> bool:
        return not any(self.coords)

    @cached_property
    def monomial_coords(self) -> tuple[int, ...]:
        """Coordinates in the canonical ``E4^a E6^b Delta^j`` monomials."""
        if not self.coords:
            return ()
        d = len(self.coords)
        raw = echelon_basis_M(self.weight, d, self.params.modulus, reduced=False)
        return tuple(raw.coordinates(self._psi.truncate(d)))

    def render(self) -> str:
        """``eta^gamma * (c1 * mono1 + ...)`` in canonical monomials, ``0`` if zero."""
        if self.is_zero():
            return "0"
        mons = canonical_monomials(self.weight)
        terms = []
        for c, mon in zip(self.monomial_coords, mons):
            if not c:
                continue
            lab = mon.label()
            terms.append(lab if c == 1 and lab != "1" else (str(c) if lab == "1" else f"{c}·{lab}"))
        return " + ".join(terms)

    def phi_series(self, T: int) -> QSeries:
        """``phi`` itself to ``q^T``."""
        basis = echelon_basis_M(self.weight, T, self.params.modulus)
        if not basis.elements:
            return QSeries.zero(T, self.params.modulus)
        return basis.combine(list(self.coords))

    def reconstruct(self, N: int) -> QSeries:
        """``eta(24z)^gamma phi(24z)`` to ``q^N``."""
        g = self.params.gamma
        T = -((g - N) // 24)
        body = series_mul(euler_power(g, T, self.params.modulus), self.phi_series(T))
        return op_V(body, 24).shift(g).truncate(N)

    def as_dict(self) -> dict:
        return {
            "lambda": self.weight,
            "dim": len(self.coords),
            "coords": list(self.coords),
            "monomial_coords": list(self.monomial_coords),
            "monomials": [m.label() for m in canonical_monomials(self.weight)],
            "rendered": self.render(),
            "verified_to": self.verified_to,
            "sturm_grade": self.sturm_grade,
        }


def solve_phi(
    params: MultipartitionParams, N: int | None = None, window: int = SAFETY_WINDOW
) -> PhiExpression:
    """Find ``phi`` with ``F = eta(24z)^gamma phi(24z)`` (mod ``m^k``) below ``q^N``.

    The first ``dim M_lam`` contracted coefficients fix ``phi``; all the rest
    up to ``N`` are checked and a mismatch raises :class:`IdentityFailure`.
    """
    need = default_trunc(params, window)
    if N is None:
        N = need
    if N < need:
        raise InsufficientTruncation(f"N={N} below required {need} for (m,k,r)=({params.m},{params.k},{params.r})")
    mod = params.modulus
    T = -((params.gamma - N) // 24)
    psi = contracted_quotient(params, T, mod)
    d = params.dim
    if d == 0:
        v = psi.valuation()
        if v is not None:
            raise IdentityFailure(
                f"weight {params.lam} has no forms but F/eta^gamma is nonzero at q^{24 * v + params.gamma}",
                24 * v + params.gamma,
            )
        coords: tuple[int, ...] = ()
    else:
        basis = echelon_basis_M(params.lam, T, mod)
        coords = tuple(int(c) for c in psi.coeffs[:d])
        residual = psi - basis.combine(list(coords))
        v = residual.valuation()
        if v is not None:
            raise IdentityFailure(
                f"F/eta^gamma leaves M_{params.lam} at q^{24 * v + params.gamma}",
                24 * v + params.gamma,
            )
    return PhiExpression(params, coords, N, N >= sturm_bound(params), psi)


def detect_ramanujan(
    params: MultipartitionParams, N: int | None = None, oracle_n_max: int | None = 20
) -> CongruenceCertificate | None:
    """Certificate for ``p_r(m^k n + beta) = 0 (mod m^k)`` iff ``phi`` vanishes.

    ``N=None`` uses the Sturm bound.  Smaller ``N`` still certify, but the
    record is marked heuristic (``sturm_grade=False``).
    """
    if N is None:
        N = max(sturm_bound(params), default_trunc(params))
    phi = solve_phi(params, N)
    if not phi.is_zero():
        return None
    cert = CongruenceCertificate("ramanujan", params.m, params.k, params.r, params.beta)
    cert = cert.with_record(
        VerificationRecord(
            "phi-vanishing", True, truncation=N, sturm_grade=phi.sturm_grade,
            detail=f"F/eta(24z)^{params.gamma} ≡ 0 (mod {params.mk}) below q^{N}; "
            f"sturm bound {sturm_bound(params)}",
        )
    )
    if oracle_n_max is not None:
        from .oracle import verify_progression

        rep = verify_progression(params.mk, params.beta, params.mk, params.r, oracle_n_max)
        if not rep.ok:
            raise IdentityFailure(f"phi vanishes but the oracle disagrees: {rep.summary()}")
        cert = cert.with_record(
            VerificationRecord(
                "oracle-exact", rep.ok, oracle_range=(0, oracle_n_max), detail=rep.summary()
            )
        )
    return cert


# ---------------------------------------------------------------------------
# Cross-checks


@dataclass(frozen=True)
class IdentityCheck:
    ok: bool
    truncation: int
    first_mismatch: int | None = None
    detail: str = ""

    def __bool__(self) -> bool:
        return self.ok


def _compare(lhs: QSeries, rhs: QSeries, N: int, what: str) -> IdentityCheck:
    top = min(lhs.trunc, rhs.trunc, N)
    diff = (lhs - rhs).truncate(top)
    v = diff.valuation()
    if v is None:
        return IdentityCheck(True, top, None, what)
    return IdentityCheck(False, top, v, f"{what}: first difference at q^{v}")


def check_F_via_eta_quotient(
    params: MultipartitionParams, N: int, modulus: Modulus | None | str = None
) -> IdentityCheck:
    """Compare ``F`` with ``((f | U_{m^k}) | V_24) / eta(24z)^{m^k r}`` below ``q^N``.

    The identity is exact, so by default both sides use integer arithmetic.
    """
    mod = params.modulus if modulus == "default" else modulus
    M, r = params.mk, params.r
    shift = M * r
    f_val = (M * M - 1) * r // 24
    # f|U|V24 starts at 24*ceil(f_val/M); we need it to q^(N + shift)
    need_f = M * (-(-(N + shift) // 24))
    f = eta_quotient_f(params, max(need_f, f_val + 1), mod)
    g = op_V(op_U(f, M), 24)
    rhs = series_div(g, eta24_pow(shift, N + 2 * shift, mod))
    lhs = compute_F(params, N, mod)
    return _compare(lhs, rhs, N, "F versus (f|U)|V / eta(24z)^(m^k r)")


def check_G_in_Mw(params: MultipartitionParams, N: int) -> IdentityCheck:
    """Check that ``f | U_{m^k}`` (mod ``m^k``) lies in ``M_w`` below ``q^N``."""
    mod = params.modulus
    M = params.mk
    f = eta_quotient_f(params, M * N, mod)
    G = op_U(f, M).with_offset(0)
    basis = echelon_basis_M(params.w, N, mod)
    if N < basis.dimension:
        raise InsufficientTruncation(f"N={N} below dim M_{params.w} = {basis.dimension}")
    coords = [int(c) for c in G.coeffs[: basis.dimension]]
    fit = basis.combine(coords) if basis.elements else QSeries.zero(N, mod)
    return _compare(G, fit, N, f"f|U_{M} versus its projection to M_{params.w}")


def check_G_matches_phi(params: MultipartitionParams, N: int) -> IdentityCheck:
    """Check ``f | U_{m^k} = Delta^v phi`` (mod ``m^k``) with ``v = (m^k r + gamma)/24``."""
    mod = params.modulus
    v = params.delta_power
    phi = solve_phi(params)
    f = eta_quotient_f(params, params.mk * N, mod)
    G = op_U(f, params.mk)
    if phi.is_zero():
        rhs = QSeries.zero(N, mod)
    else:
        rhs = series_mul(delta(N, mod) ** v if v else QSeries.one(N, mod), phi.phi_series(N))
    return _compare(G, rhs, N, "f|U versus Delta^v phi")


# ---------------------------------------------------------------------------
# Scanning

#: Contracted coefficients inspected before paying for a Sturm-grade solve.
SCAN_PROBE = 64


@dataclass(frozen=True)
class ScanCell:
    params: MultipartitionParams
    certificate: CongruenceCertificate | None
    witness: int | None = None  # t with p_r(m^k t + beta) nonzero mod m^k

    def as_dict(self) -> dict:
        p = self.params
        return {
            "m": p.m, "k": p.k, "r": p.r, "modulus": p.mk, "beta": p.beta,
            "certificate": self.certificate.to_dict() if self.certificate else None,
            "witness_t": self.witness,
        }


def scan_cell(
    m: int, k: int, r: int, probe: int = SCAN_PROBE, oracle_n_max: int | None = 20
) -> ScanCell:
    """Decide ``p_r(m^k n + beta) = 0 (mod m^k)`` for one triple.

    A nonzero coefficient among the first ``probe`` values of the progression
    refutes the congruence outright; otherwise ``phi`` is solved to the
    Sturm bound and the certificate is oracle-checked.
    """
    params = derive_params(m, k, r)
    prog = progression_series(params, probe)
    t = prog.valuation()
    if t is not None:
        return ScanCell(params, None, t)
    cert = detect_ramanujan(params, None, oracle_n_max)
    return ScanCell(params, cert)

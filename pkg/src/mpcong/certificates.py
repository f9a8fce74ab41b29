"""Machine-checkable congruence statements and their verification records."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import Any

KINDS = ("ramanujan", "hecke-vanishing", "hecke-periodicity")


class CertificateError(ValueError):
    """A certificate document is malformed."""


@dataclass(frozen=True)
class VerificationRecord:
    """One successful (or failed) machine check backing a certificate."""

    method: str
    passed: bool
    truncation: int | None = None
    sturm_grade: bool = False
    oracle_range: tuple[int, int] | None = None
    detail: str = ""

    def to_dict(self) -> dict[str, Any]:
        d = asdict(self)
        d["oracle_range"] = list(self.oracle_range) if self.oracle_range else None
        return d

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "VerificationRecord":
        rng = d.get("oracle_range")
        return cls(
            method=str(d["method"]),
            passed=bool(d["passed"]),
            truncation=d.get("truncation"),
            sturm_grade=bool(d.get("sturm_grade", False)),
            oracle_range=tuple(rng) if rng else None,
            detail=str(d.get("detail", "")),
        )


@dataclass(frozen=True)
class CongruenceCertificate:
    """A congruence for ``p_r`` modulo ``m^k``.

    ``ramanujan``:          p_r(m^k n + beta) = 0 (mod m^k) for all n >= 0.
    ``hecke-vanishing``:    p_r((m^k ell^(2 mu K - 1) n + r)/24) = 0 for all
                            mu >= 1 and n >= 1 with ell not dividing n.
    ``hecke-periodicity``:  p_r((m^k ell^i n + r)/24) equals
                            p_r((m^k ell^(2M + i) n + r)/24) for all i, n >= 0.
    """

    kind: str
    m: int
    k: int
    r: int
    beta: int
    ell: int | None = None
    order: int | None = None
    scalar: int | None = None
    verifications: tuple[VerificationRecord, ...] = field(default_factory=tuple)

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise CertificateError(f"unknown certificate kind {self.kind!r}")
        if self.kind != "ramanujan" and (self.ell is None or self.order is None):
            raise CertificateError(f"{self.kind} certificate needs ell and order")

    @property
    def modulus(self) -> int:
        return self.m**self.k

    @property
    def verified(self) -> bool:
        return any(v.passed for v in self.verifications)

    @property
    def sturm_grade(self) -> bool:
        return any(v.passed and v.sturm_grade for v in self.verifications)

    @property
    def exponent(self) -> int | None:
        """The ``mu = 1`` exponent ``2K - 1`` (vanishing) or the period ``2M``."""
        if self.kind == "hecke-vanishing":
            return 2 * self.order - 1
        if self.kind == "hecke-periodicity":
            return 2 * self.order
        return None

    def statement(self) -> str:
        mk, r = self.modulus, self.r
        if self.kind == "ramanujan":
            return f"p_{r}({mk}n + {self.beta}) ≡ 0 (mod {mk})"
        ell, K = self.ell, self.order
        if self.kind == "hecke-vanishing":
            return (
                f"p_{r}(({mk}·{ell}^(2μ·{K}-1)·n + {r})/24) ≡ 0 (mod {mk}); "
                f"μ=1: p_{r}(({mk}·{ell}^{2 * K - 1}·n + {r})/24) ≡ 0 (mod {mk})"
            )
        return (
            f"p_{r}(({mk}·{ell}^i·n + {r})/24) ≡ "
            f"p_{r}(({mk}·{ell}^({2 * K}+i)·n + {r})/24) (mod {mk})"
        )

    def side_condition(self) -> str:
        if self.kind == "ramanujan":
            return "all integers n ≥ 0"
        if self.kind == "hecke-vanishing":
            return f"all μ ≥ 1 and all integers n ≥ 1 with {self.ell} ∤ n"
        return "all integers i ≥ 0 and n ≥ 0"

    def with_record(self, record: VerificationRecord) -> "CongruenceCertificate":
        return CongruenceCertificate(
            self.kind, self.m, self.k, self.r, self.beta, self.ell, self.order,
            self.scalar, self.verifications + (record,),
        )

    def to_dict(self) -> dict[str, Any]:
        return {
            "kind": self.kind,
            "m": self.m,
            "k": self.k,
            "r": self.r,
            "modulus": self.modulus,
            "beta": self.beta,
            "ell": self.ell,
            "order": self.order,
            "scalar": self.scalar,
            "exponent": self.exponent,
            "statement": self.statement(),
            "side_condition": self.side_condition(),
            "sturm_grade": self.sturm_grade,
            "verifications": [v.to_dict() for v in self.verifications],
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "CongruenceCertificate":
        try:
            return cls(
                kind=str(d["kind"]),
                m=int(d["m"]),
                k=int(d["k"]),
                r=int(d["r"]),
                beta=int(d["beta"]),
                ell=None if d.get("ell") is None else int(d["ell"]),
                order=None if d.get("order") is None else int(d["order"]),
                scalar=None if d.get("scalar") is None else int(d["scalar"]),
                verifications=tuple(
                    VerificationRecord.from_dict(v) for v in d.get("verifications", [])
                ),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise CertificateError(f"malformed certificate: {exc}") from exc

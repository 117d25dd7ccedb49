"""TR-group ranks and orders, and their assembly into K_q(A, I).

For A = Z[x,y]/(xy) and I = (x,y), the p-adic part of K_q(A, I) is a product
over d prime to p of lim_R TR^r_{q - lambda_{p^(r-1) d}}(Z; p).  In odd degree
q = 2i+1 the limit is attained at the unique level r with
p^(r-1) d <= i < p^r d; in even degree only d with i = p^s d contributes,
one copy of Z per prime.
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

from ktr.arith import (
    check_prime,
    factorial_p_valuation,
    fixed_dim,
    p_part,
    p_valuation,
    primes_upto,
)


def _check_coprime(p: int, d: int) -> None:
    check_prime(p)
    if d < 1:
        raise ValueError(f"d must be a positive integer, got {d}")
    if d % p == 0:
        raise ValueError(f"d={d} is divisible by p={p}")


def unique_level(i: int, p: int, d: int) -> Optional[int]:
    """The unique r >= 1 with p^(r-1) d <= i < p^r d, or None when d > i."""
    _check_coprime(p, d)
    if i < 0:
        raise ValueError(f"i must be >= 0, got {i}")
    if d > i:
        return None
    r = 1
    while p**r * d <= i:
        r += 1
    return r


def tr_order(i: int, p: int, d: int, r: int) -> int:
    """|TR^r_{2i+1 - lambda_{p^(r-1) d}}(Z; p)| at an arbitrary level r.

    Valid whenever every factor i + 1 - p^k d is positive, i.e. p^(r-1) d <= i.
    """
    _check_coprime(p, d)
    if r < 1:
        raise ValueError(f"level must be >= 1, got {r}")
    order = p ** (r * (r - 1) // 2)
    for k in range(r):
        factor = i + 1 - fixed_dim(p ** (r - 1) * d, p**k)
        if factor < 1:
            raise ValueError(
                f"level r={r} is too large for i={i}, d={d} (factor {factor})"
            )
        order *= factor
    return order


def tr_odd_order(i: int, p: int, d: int) -> int:
    """Raw order of the odd-degree limit group; 1 when no level exists."""
    r = unique_level(i, p, d)
    if r is None:
        return 1
    return tr_order(i, p, d, r)


def lim_even_rank(i: int, p: int, d: int) -> int:
    """Rank of lim_R TR^r_{2i - lambda_{p^(r-1) d}}(Z; p): 1 iff i = p^s d."""
    _check_coprime(p, d)
    if i < d or i % d:
        return 0
    quotient = i // d
    while quotient % p == 0:
        quotient //= p
    return int(quotient == 1)


def tr_even_rank(i: int, p: int, d: int, r: int) -> int:
    """Rank of TR^r_{2i - lambda_{p^(r-1) d}}(Z; p) at a fixed level r."""
    _check_coprime(p, d)
    if r < 1:
        raise ValueError(f"level must be >= 1, got {r}")
    n = p ** (r - 1) * d
    return sum(1 for s in range(r) if fixed_dim(n, p**s) == i)


def k_odd_order_p(i: int, p: int) -> int:
    """Order of the p-part of K_{2i+1}(A, I), as a product of TR p-parts."""
    check_prime(p)
    order = 1
    for d in range(1, i + 1):
        if d % p:
            order *= p_part(tr_odd_order(i, p, d), p)
    return order


@dataclass(frozen=True)
class TRSummand:
    """One factor TR^r_{q - lambda_{p^(r-1) d}}(Z; p) of a K-group."""

    p: int
    d: int
    r: int
    q: int
    lambda_index: int
    order_raw: Optional[int] = None
    order_p_part: Optional[int] = None
    rank: Optional[int] = None

    @property
    def key(self) -> tuple[int, int, int]:
        return (self.p, self.d, self.r)

    def label(self) -> str:
        return f"TR^{self.r}_{{{self.q}-λ_{self.lambda_index}}}(Z;{self.p})"

    def as_dict(self) -> dict:
        return {
            "p": self.p,
            "d": self.d,
            "r": self.r,
            "q": self.q,
            "lambda_index": self.lambda_index,
            "order_raw": self.order_raw,
            "order_p_part": self.order_p_part,
            "rank": self.rank,
        }


def odd_summand(i: int, p: int, d: int) -> Optional[TRSummand]:
    """The TRSummand for (i, p, d) in degree 2i+1, or None if d > i."""
    r = unique_level(i, p, d)
    if r is None:
        return None
    raw = tr_order(i, p, d, r)
    return TRSummand(
        p=p,
        d=d,
        r=r,
        q=2 * i + 1,
        lambda_index=p ** (r - 1) * d,
        order_raw=raw,
        order_p_part=p_part(raw, p),
    )


@dataclass(frozen=True)
class KGroupReport:
    q: int
    rank: int
    torsion_order: int
    per_prime: dict[int, int]
    summands: list[TRSummand]
    notes: list[str] = field(default_factory=list)

    @property
    def i(self) -> int:
        return self.q // 2

    def summand_keys(self) -> list[tuple[int, int, int]]:
        return [s.key for s in self.summands]


def k_group(q: int) -> KGroupReport:
    """Rank, torsion order and TR decomposition of K_q(A, I)."""
    if q < 0:
        raise ValueError(f"degree must be >= 0, got {q}")
    i = q // 2
    if q % 2 == 0:
        return _k_even(i)
    return _k_odd(i)


def _k_even(i: int) -> KGroupReport:
    summands = []
    notes = []
    if i == 0:
        notes.append("rank 1 in degree 0 taken from the main theorem; "
                     "the TR enumeration has no witness at i = 0")
    else:
        for p in primes_upto(max(i, 2)):
            s = p_valuation(i, p)
            d = i // p**s
            if not lim_even_rank(i, p, d):
                raise AssertionError(f"no rank witness for i={i}, p={p}")
            summands.append(
                TRSummand(p=p, d=d, r=s + 1, q=2 * i, lambda_index=i, rank=1)
            )
    return KGroupReport(
        q=2 * i, rank=1, torsion_order=1, per_prime={}, summands=summands,
        notes=notes,
    )


def _k_odd(i: int) -> KGroupReport:
    per_prime = {}
    summands = []
    for p in primes_upto(i):
        order_p = 1
        for d in range(1, i + 1):
            if d % p == 0:
                continue
            summand = odd_summand(i, p, d)
            if summand.order_p_part > 1:
                summands.append(summand)
                order_p *= summand.order_p_part
        per_prime[p] = order_p
    torsion = math.prod(per_prime.values())
    expected = math.factorial(i) ** 2
    if torsion != expected:
        raise AssertionError(
            f"K_{2 * i + 1}: assembled order {torsion} != (i!)^2 = {expected}"
        )
    summands.sort(key=lambda s: (s.p, s.d))
    return KGroupReport(
        q=2 * i + 1, rank=0, torsion_order=torsion, per_prime=per_prime,
        summands=summands,
    )


@dataclass
class VerificationReport:
    max_i: int
    ok: bool
    orders: list[int]
    ranks: list[int]
    first_discrepancy: Optional[str]
    elapsed: float

    def table(self) -> list[tuple[int, int]]:
        """(q, order) rows for odd q; even degrees are free and omitted."""
        return [(2 * i + 1, order) for i, order in enumerate(self.orders)]


def _check_degree(i: int) -> tuple[int, int, int, Optional[str]]:
    even = k_group(2 * i)
    try:
        odd = k_group(2 * i + 1)
    except AssertionError as exc:
        return i, even.rank, 0, str(exc)
    expected = math.factorial(i) ** 2
    if even.rank != 1 or even.torsion_order != 1:
        return i, even.rank, odd.torsion_order, f"K_{2 * i} is not free of rank 1"
    if odd.rank != 0 or odd.torsion_order != expected:
        return i, even.rank, odd.torsion_order, (
            f"K_{2 * i + 1} has order {odd.torsion_order}, expected {expected}"
        )
    for p in primes_upto(i):
        legendre = p ** (2 * factorial_p_valuation(i, p))
        if odd.per_prime.get(p) != legendre or k_odd_order_p(i, p) != legendre:
            return i, even.rank, odd.torsion_order, (
                f"K_{2 * i + 1}: {p}-part {odd.per_prime.get(p)} != {legendre}"
            )
    return i, even.rank, odd.torsion_order, None


def verify_theorem_a(max_i: int, workers: int = 1) -> VerificationReport:
    """Check rank 1 in degree 2i and order (i!)^2 in degree 2i+1 for i <= max_i."""
    if max_i < 0:
        raise ValueError(f"max_i must be >= 0, got {max_i}")
    start = time.perf_counter()
    indices = range(max_i + 1)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_check_degree, indices))
    else:
        rows = [_check_degree(i) for i in indices]
    rows.sort()
    discrepancy = next((msg for *_, msg in rows if msg), None)
    return VerificationReport(
        max_i=max_i,
        ok=discrepancy is None,
        orders=[order for _, _, order, _ in rows],
        ranks=[rank for _, rank, _, _ in rows],
        first_discrepancy=discrepancy,
        elapsed=time.perf_counter() - start,
    )

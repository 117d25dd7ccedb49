"""Finite abelian p-groups given by exponent partitions.

A group Z/p^e1 + ... + Z/p^em is stored as its prime and the non-increasing
tuple (e1, ..., em).  This is enough to enumerate candidate structures from
an order and a summand count, and to rule candidates out with mod p^v orders.
"""

from __future__ import annotations

import csv
import math
import os
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from pathlib import Path
from typing import Iterable, Optional, Sequence

from ktr.arith import check_prime, p_valuation

DATA_ENV = "KTR_DATA_DIR"


@dataclass(frozen=True)
class AbelianPGroup:
    p: int
    exponents: tuple[int, ...] = ()

    def __post_init__(self):
        check_prime(self.p)
        exps = tuple(sorted((int(e) for e in self.exponents), reverse=True))
        if any(e < 1 for e in exps):
            raise ValueError(f"exponents must be positive, got {self.exponents}")
        object.__setattr__(self, "exponents", exps)

    @property
    def total_exponent(self) -> int:
        return sum(self.exponents)

    @property
    def order(self) -> int:
        return self.p**self.total_exponent

    @property
    def summands(self) -> int:
        return len(self.exponents)

    def cyclic_orders(self) -> list[int]:
        """Orders of the cyclic summands, ascending."""
        return [self.p**e for e in reversed(self.exponents)]

    def __str__(self):
        return format_groups([self])


def format_groups(groups: Iterable[AbelianPGroup]) -> str:
    """Render as "Z/a ⊕ Z/b ⊕ ...", sorted by prime then ascending order."""
    parts = []
    for g in sorted(groups, key=lambda g: g.p):
        parts.extend(f"Z/{n}" for n in g.cyclic_orders())
    return " ⊕ ".join(parts) if parts else "0"


def parse_groups(text: str) -> list[AbelianPGroup]:
    """Inverse of ``format_groups``; accepts "+" as well as "⊕"."""
    text = text.strip()
    if text in ("0", ""):
        return []
    by_prime: dict[int, list[int]] = {}
    for token in text.replace("+", "⊕").split("⊕"):
        token = token.strip()
        if not token.startswith("Z/"):
            raise ValueError(f"cannot parse cyclic factor {token!r}")
        n = int(token[2:])
        p = _prime_of_power(n)
        by_prime.setdefault(p, []).append(p_valuation(n, p))
    return [AbelianPGroup(p, tuple(exps)) for p, exps in sorted(by_prime.items())]


def _prime_of_power(n: int) -> int:
    if n < 2:
        raise ValueError(f"Z/{n} is not a nontrivial cyclic p-group")
    p = next(k for k in range(2, n + 1) if n % k == 0)
    m = n
    while m % p == 0:
        m //= p
    if m != 1:
        raise ValueError(f"{n} is not a prime power")
    return p


@lru_cache(maxsize=None)
def _partitions(total: int, parts: int, largest: int) -> tuple[tuple[int, ...], ...]:
    if parts == 0:
        return ((),) if total == 0 else ()
    out = []
    for first in range(min(total - (parts - 1), largest), 0, -1):
        for rest in _partitions(total - first, parts - 1, first):
            out.append((first,) + rest)
    return tuple(out)


def enumerate_candidates(total_exponent: int, summands: int, p: int) -> list[AbelianPGroup]:
    """All p-groups of order p^total_exponent with exactly ``summands`` cyclic factors."""
    check_prime(p)
    if total_exponent < 1 or summands < 1:
        raise ValueError("total_exponent and summands must be positive")
    if summands > total_exponent:
        return []
    return [
        AbelianPGroup(p, parts)
        for parts in _partitions(total_exponent, summands, total_exponent)
    ]


def quotient_order(group: AbelianPGroup, v: int) -> int:
    """|G / p^v G|."""
    if v < 1:
        raise ValueError(f"v must be >= 1, got {v}")
    return group.p ** sum(min(e, v) for e in group.exponents)


def torsion_order(group: AbelianPGroup, v: int) -> int:
    """|G[p^v]|, the number of elements killed by p^v."""
    if v < 1:
        raise ValueError(f"v must be >= 1, got {v}")
    return group.p ** sum(min(e, v) for e in group.exponents)


def mod_coeff_order(group: AbelianPGroup, adjacent_torsion_free: bool, v: int) -> int:
    """Order of the mod p^v homotopy group in the degree carrying ``group``.

    In general this is |G_q / p^v| * |G_{q-1}[p^v]|.  Only the case where
    G_{q-1} is torsion free is supported, so the second factor is 1.
    """
    if not adjacent_torsion_free:
        raise ValueError(
            "mod p^v orders with torsion in the adjacent degree are not supported"
        )
    return quotient_order(group, v)


def discriminate(
    total_exponent: int,
    summands: int,
    p: int,
    v: Optional[int] = None,
    observed_mod_order: Optional[int] = None,
) -> list[AbelianPGroup]:
    """Candidates compatible with an observed mod p^v order.

    With no observation every candidate survives.  An empty list means the
    constraints are inconsistent.
    """
    candidates = enumerate_candidates(total_exponent, summands, p)
    if observed_mod_order is None:
        return candidates
    if v is None:
        raise ValueError("an observed mod p^v order needs v")
    return [
        g for g in candidates
        if mod_coeff_order(g, True, v) == observed_mod_order
    ]


@dataclass(frozen=True)
class KnownGroupEntry:
    label: str
    kind: str
    q: int
    groups: tuple[AbelianPGroup, ...]
    order: int
    summand_counts: dict[int, int]
    status: str
    source: str
    p: Optional[int] = None
    r: Optional[int] = None
    lambda_index: Optional[int] = None

    @property
    def group_string(self) -> str:
        return format_groups(self.groups)

    @property
    def conjectural(self) -> bool:
        return self.status == "conjectural"


REGISTRY_FIELDS = [
    "label", "kind", "q", "p", "r", "lambda_index",
    "group", "order", "summand_counts", "status", "source",
]


def data_dir() -> Path:
    """Directory holding the bundled data, overridable via $KTR_DATA_DIR."""
    override = os.environ.get(DATA_ENV)
    if override:
        return Path(override)
    return Path(str(resources.files("ktr") / "data"))


def _parse_counts(text: str) -> dict[int, int]:
    counts = {}
    for item in filter(None, text.split(";")):
        p, n = item.split(":")
        counts[int(p)] = int(n)
    return counts


def _opt_int(text: str) -> Optional[int]:
    return int(text) if text.strip() else None


def load_registry(path: Optional[Path] = None) -> list[KnownGroupEntry]:
    path = Path(path) if path else data_dir() / "known_structures.csv"
    entries = []
    with open(path, newline="", encoding="utf-8") as fh:
        for lineno, row in enumerate(csv.DictReader(fh), start=2):
            groups = tuple(parse_groups(row["group"]))
            order = int(row["order"])
            if math.prod(g.order for g in groups) != order:
                raise ValueError(f"{path}:{lineno}: order {order} does not match {row['group']}")
            if row["status"] not in ("proven", "conjectural"):
                raise ValueError(f"{path}:{lineno}: bad status {row['status']!r}")
            entries.append(KnownGroupEntry(
                label=row["label"],
                kind=row["kind"],
                q=int(row["q"]),
                groups=groups,
                order=order,
                summand_counts=_parse_counts(row["summand_counts"]),
                status=row["status"],
                source=row["source"],
                p=_opt_int(row["p"]),
                r=_opt_int(row["r"]),
                lambda_index=_opt_int(row["lambda_index"]),
            ))
    return entries


def known_structures() -> list[KnownGroupEntry]:
    """Every group structure and summand count recorded in the bundled registry."""
    return load_registry()


def lookup_k(q: int, entries: Optional[Sequence[KnownGroupEntry]] = None) -> Optional[KnownGroupEntry]:
    """The registry entry for K_q(A, I), if its structure is recorded."""
    for entry in entries if entries is not None else known_structures():
        if entry.kind == "K" and entry.q == q:
            return entry
    return None


def lookup_tr(q: int, p: int, lambda_index: int,
              entries: Optional[Sequence[KnownGroupEntry]] = None) -> Optional[KnownGroupEntry]:
    for entry in entries if entries is not None else known_structures():
        if (entry.kind == "TR" and entry.q == q and entry.p == p
                and entry.lambda_index == lambda_index):
            return entry
    return None

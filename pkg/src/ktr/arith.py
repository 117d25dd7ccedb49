"""Integer arithmetic shared by the TR formulas.

Everything here works on Python ints, so orders like (40!)^2 stay exact.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    if n < 4:
        return True
    if n % 2 == 0:
        return False
    k = 3
    while k * k <= n:
        if n % k == 0:
            return False
        k += 2
    return True


def check_prime(p: int) -> int:
    """Return ``p`` unchanged, or raise ``ValueError`` if it is not prime."""
    if not isinstance(p, int) or isinstance(p, bool):
        raise TypeError(f"prime must be an int, got {type(p).__name__}")
    if not is_prime(p):
        raise ValueError(f"{p} is not prime")
    return p


@lru_cache(maxsize=64)
def _primes_upto(n: int) -> tuple[int, ...]:
    if n < 2:
        return ()
    sieve = bytearray([1]) * (n + 1)
    sieve[0] = sieve[1] = 0
    for k in range(2, int(n**0.5) + 1):
        if sieve[k]:
            sieve[k * k :: k] = bytearray(len(range(k * k, n + 1, k)))
    return tuple(k for k, flag in enumerate(sieve) if flag)


def primes_upto(n: int) -> list[int]:
    """Primes p with p <= n, ascending."""
    return list(_primes_upto(n))


def fixed_dim(n: int, m: int) -> int:
    """Complex dimension of the C_m-fixed part of lambda_n = C(1) + ... + C(n).

    C_m fixes the summand C(j) exactly when m divides j, so the answer is
    floor(n / m).
    """
    if n < 0:
        raise ValueError(f"representation index must be >= 0, got {n}")
    if m < 1:
        raise ValueError(f"invalid subgroup order {m}")
    return n // m


def p_valuation(n: int, p: int) -> int:
    """Largest e with p**e dividing n."""
    check_prime(p)
    if n == 0:
        raise ValueError("valuation of 0 is undefined")
    n = abs(n)
    e = 0
    while n % p == 0:
        n //= p
        e += 1
    return e


def p_part(n: int, p: int) -> int:
    """The p-primary part p**v_p(n) of n."""
    return p ** p_valuation(n, p)


def factorial_p_valuation(i: int, p: int) -> int:
    """v_p(i!) by Legendre's formula, sum of floor(i / p**k) over k >= 1."""
    check_prime(p)
    if i < 0:
        raise ValueError(f"factorial of negative integer {i}")
    total = 0
    q = i // p
    while q:
        total += q
        q //= p
    return total


@dataclass(frozen=True)
class Lambda:
    """The S^1-representation lambda_n, tracked only through its index."""

    n: int

    def __post_init__(self):
        if self.n < 0:
            raise ValueError(f"lambda index must be >= 0, got {self.n}")

    @property
    def dim(self) -> int:
        return self.n

    def fixed(self, m: int) -> "Lambda":
        return Lambda(fixed_dim(self.n, m))

    def __str__(self):
        return f"λ_{self.n}"


@dataclass(frozen=True)
class PrimePower:
    p: int
    e: int

    def __post_init__(self):
        check_prime(self.p)
        if self.e < 0:
            raise ValueError(f"exponent must be >= 0, got {self.e}")

    @property
    def value(self) -> int:
        return self.p**self.e

    def __int__(self):
        return self.value

"""Arithmetic in H*(RP^n; Z_2) = Z_2[a]/(a^(n+1)) and Stiefel-Whitney obstructions.

A class is stored as a Python integer bitmask: bit k is the coefficient of
a^k. Multiplication is a carry-less (XOR) convolution followed by masking
off every degree above the truncation degree.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

__all__ = [
    "MAX_DEGREE",
    "Z2Poly",
    "SwClassification",
    "poly_mul",
    "poly_pow",
    "binom_mod2",
    "sw_tangent_rpn",
    "sw_gen_tangent_rpn",
    "obstruction_trivial",
    "is_power_of_two",
    "allard_min_copies",
    "classify_table",
    "PARALLELIZABLE_RPN",
    "PARALLELIZABLE_SPHERES",
]

MAX_DEGREE = 1024

# Looked-up facts (Adams / Bott-Milnor-Kervaire); never derived from SW classes.
PARALLELIZABLE_RPN = frozenset({1, 3, 7})
PARALLELIZABLE_SPHERES = frozenset({1, 3, 7})


@dataclass(frozen=True)
class Z2Poly:
    """Truncated polynomial over Z_2 in one generator ``a`` of degree 1.

    Parameters
    ----------
    n : int
        Truncation degree; a^(n+1) = 0.
    bits : int
        Coefficient bitmask, bit k is the coefficient of a^k. Bits above
        ``n`` are discarded on construction.
    """

    n: int
    bits: int = 1

    def __post_init__(self):
        if not 0 <= self.n <= MAX_DEGREE:
            raise ValueError(f"truncation degree {self.n} outside [0, {MAX_DEGREE}]")
        if self.bits < 0:
            raise ValueError("coefficient bitmask must be non-negative")
        object.__setattr__(self, "bits", self.bits & ((1 << (self.n + 1)) - 1))

    @classmethod
    def one(cls, n: int) -> "Z2Poly":
        return cls(n, 1)

    @classmethod
    def generator(cls, n: int) -> "Z2Poly":
        """The class ``a`` (zero when n = 0)."""
        return cls(n, 2)

    @classmethod
    def from_coefficients(cls, n: int, coeffs) -> "Z2Poly":
        bits = 0
        for k, c in enumerate(coeffs):
            if int(c) & 1:
                bits |= 1 << k
        return cls(n, bits)

    @property
    def coefficients(self) -> tuple[int, ...]:
        return tuple((self.bits >> k) & 1 for k in range(self.n + 1))

    def __getitem__(self, k: int) -> int:
        if k < 0:
            raise IndexError(k)
        return (self.bits >> k) & 1

    def is_one(self) -> bool:
        return self.bits == 1

    def degrees(self) -> list[int]:
        return [k for k in range(self.n + 1) if (self.bits >> k) & 1]

    def __mul__(self, other: "Z2Poly") -> "Z2Poly":
        return poly_mul(self, other)

    def __pow__(self, e: int) -> "Z2Poly":
        return poly_pow(self, e)

    def __add__(self, other: "Z2Poly") -> "Z2Poly":
        _check_same_degree(self, other)
        return Z2Poly(self.n, self.bits ^ other.bits)

    def __str__(self) -> str:
        terms = []
        for k in self.degrees():
            terms.append("1" if k == 0 else "a" if k == 1 else f"a^{k}")
        return " + ".join(terms) if terms else "0"

    def to_hex(self) -> str:
        """Little-endian hex bitmask: byte 0 holds degrees 0..7."""
        nbytes = self.n // 8 + 1
        return self.bits.to_bytes(nbytes, "little").hex()

    @classmethod
    def from_hex(cls, n: int, text: str) -> "Z2Poly":
        return cls(n, int.from_bytes(bytes.fromhex(text), "little"))

    @classmethod
    def parse(cls, n: int, text: str) -> "Z2Poly":
        """Parse the human-readable form, e.g. ``"1 + a^2 + a^5"``.

        Repeated terms cancel in pairs, as they should over Z_2.
        """
        text = text.strip()
        if text == "0":
            return cls(n, 0)
        bits = 0
        for term in text.split("+"):
            term = term.strip()
            if term == "1":
                k = 0
            elif term == "a":
                k = 1
            else:
                m = re.fullmatch(r"a\^(\d+)", term)
                if m is None:
                    raise ValueError(f"cannot parse term {term!r}")
                k = int(m.group(1))
            bits ^= 1 << k
        return cls(n, bits)

    def to_dict(self) -> dict:
        return {"n": self.n, "text": str(self), "hex": self.to_hex()}


def _check_same_degree(p: Z2Poly, q: Z2Poly) -> None:
    if p.n != q.n:
        raise ValueError(f"truncation degrees differ: {p.n} vs {q.n}")


def _clmul(a: int, b: int) -> int:
    if a < b:
        a, b = b, a
    c = 0
    while b:
        if b & 1:
            c ^= a
        a <<= 1
        b >>= 1
    return c


def poly_mul(p: Z2Poly, q: Z2Poly) -> Z2Poly:
    """Cup product of total classes; the Whitney product formula w(E+F) = w(E)w(F)."""
    _check_same_degree(p, q)
    return Z2Poly(p.n, _clmul(p.bits, q.bits))


def poly_pow(p: Z2Poly, e: int) -> Z2Poly:
    if e < 0:
        raise ValueError("exponent must be non-negative")
    result = Z2Poly.one(p.n)
    base = p
    while e:
        if e & 1:
            result = poly_mul(result, base)
        base = poly_mul(base, base)
        e >>= 1
    return result


def binom_mod2(n: int, k: int) -> int:
    """C(n, k) mod 2 by Lucas' theorem: odd iff the bits of k are a subset of n's."""
    if n < 0 or k < 0:
        raise ValueError("arguments must be non-negative")
    if k > n:
        return 0
    return 1 if (n & k) == k else 0


def sw_tangent_rpn(n: int) -> Z2Poly:
    """Total Stiefel-Whitney class w(T RP^n) = (1 + a)^(n+1), truncated at degree n.

    n = 0 (a point) gives 1.
    """
    if n < 0:
        raise ValueError("dimension must be non-negative")
    return poly_pow(Z2Poly(n, 0b11), n + 1)


def sw_gen_tangent_rpn(n: int) -> Z2Poly:
    """Total class of TM + T*M over RP^n.

    The cotangent bundle is isomorphic to the tangent bundle, so this is
    w(T RP^n) squared.
    """
    w = sw_tangent_rpn(n)
    return poly_mul(w, w)


def is_power_of_two(m: int) -> bool:
    return m > 0 and (m & (m - 1)) == 0


def obstruction_trivial(n: int) -> bool:
    """True when every positive-degree SW class of the generalized tangent bundle of RP^n vanishes."""
    return sw_gen_tangent_rpn(n).is_one()


def allard_min_copies(k: int, m: int) -> int:
    """Smallest integer r with r >= k + k/(m - k), in exact arithmetic.

    E is stably trivial with E + (trivial rank k) = trivial rank m; then
    r copies of E sum to a trivial bundle once r reaches this bound.
    """
    if k < 1:
        raise ValueError("k must be at least 1")
    if m <= k:
        raise ValueError(f"total rank m={m} must exceed k={k}")
    # k + ceil(k / (m - k)) in integer arithmetic
    return k + -(-k // (m - k))


@dataclass(frozen=True)
class SwClassification:
    """One row of the sphere / projective space summary.

    ``parallelizable_known`` is ``"yes"``, ``"no"`` or ``"undecided"``. It is
    ``"yes"`` only for the looked-up dimensions 1, 3, 7; ``"no"`` when a
    tangent Stiefel-Whitney class is nonzero; otherwise the tool does not
    decide it (vanishing SW classes do not imply parallelizability).
    """

    n: int
    tangent_sw: Z2Poly
    gen_sw: Z2Poly
    obstruction_trivial: bool
    parallelizable_known: str
    sphere_tangent_trivial: bool
    sphere_gen_trivial: bool

    @property
    def rpn_gen_trivial(self) -> str:
        """Triviality of the generalized tangent bundle of RP^n: yes / no / undecided."""
        if not self.obstruction_trivial:
            return "no"
        if self.parallelizable_known == "yes":
            return "yes"
        return "undecided"

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "sphere": {
                "tangent_trivial": self.sphere_tangent_trivial,
                "gen_trivial": self.sphere_gen_trivial,
            },
            "rpn": {
                "tangent_sw": self.tangent_sw.to_dict(),
                "gen_sw": self.gen_sw.to_dict(),
                "obstruction_trivial": self.obstruction_trivial,
                "parallelizable": self.parallelizable_known,
                "gen_trivial": self.rpn_gen_trivial,
            },
        }


def _classify(n: int) -> SwClassification:
    w = sw_tangent_rpn(n)
    ww = poly_mul(w, w)
    if n == 0 or n in PARALLELIZABLE_RPN:
        par = "yes"
    elif not w.is_one():
        par = "no"
    else:
        par = "undecided"
    return SwClassification(
        n=n,
        tangent_sw=w,
        gen_sw=ww,
        obstruction_trivial=ww.is_one(),
        parallelizable_known=par,
        sphere_tangent_trivial=n in PARALLELIZABLE_SPHERES,
        # T S^n + trivial line = trivial rank n+1, so two copies suffice once the bound is <= 2.
        sphere_gen_trivial=n >= 1 and allard_min_copies(1, n + 1) <= 2,
    )


def classify_table(n_max: int) -> list[SwClassification]:
    if n_max < 1:
        raise ValueError("n_max must be at least 1")
    if n_max > MAX_DEGREE:
        raise ValueError(f"n_max must not exceed {MAX_DEGREE}")
    return [_classify(n) for n in range(1, n_max + 1)]

"""Exact valued fields and SL2 translation lengths on Bruhat-Tits trees.

Three field contexts are supported:
  * Q with the p-adic valuation (rank 1),
  * Q(t) with the t-adic valuation at t = 0 (rank 1),
  * Q(s, t) with the rank-2 monomial valuation: t-order dominant, then the
    s-order of the lowest-t coefficient.

The translation length of m in SL2 is max(0, -2 v(Tr m)); an action of a
subgroup is free iff every nontrivial element has negative trace valuation.
All arithmetic is exact: valuations come from factor multiplicities, never
from numerics.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from math import gcd
from typing import Optional

from .ordgroup import LexValue
from .groups import Word, word_str


class FieldError(ValueError):
    pass


# univariate Laurent polynomials over Q ---------------------------------------------


def _clean1(c: dict) -> dict:
    return {e: v for e, v in c.items() if v != 0}


class Laurent1:
    """Laurent polynomial in t over Q: dict exponent -> Fraction."""

    __slots__ = ("coeffs",)

    def __init__(self, coeffs: dict):
        self.coeffs = _clean1({int(e): Fraction(v) for e, v in coeffs.items()})

    @staticmethod
    def const(q) -> "Laurent1":
        return Laurent1({0: Fraction(q)})

    @staticmethod
    def t(power: int = 1) -> "Laurent1":
        return Laurent1({power: 1})

    def is_zero(self) -> bool:
        return not self.coeffs

    def __add__(self, o: "Laurent1") -> "Laurent1":
        c = dict(self.coeffs)
        for e, v in o.coeffs.items():
            c[e] = c.get(e, Fraction(0)) + v
        return Laurent1(c)

    def __neg__(self) -> "Laurent1":
        return Laurent1({e: -v for e, v in self.coeffs.items()})

    def __sub__(self, o: "Laurent1") -> "Laurent1":
        return self + (-o)

    def __mul__(self, o: "Laurent1") -> "Laurent1":
        c: dict[int, Fraction] = {}
        for e1, v1 in self.coeffs.items():
            for e2, v2 in o.coeffs.items():
                c[e1 + e2] = c.get(e1 + e2, Fraction(0)) + v1 * v2
        return Laurent1(c)

    def __eq__(self, o) -> bool:
        return isinstance(o, Laurent1) and self.coeffs == o.coeffs

    def __hash__(self):
        return hash(frozenset(self.coeffs.items()))

    def ord(self) -> Optional[int]:
        return min(self.coeffs) if self.coeffs else None

    def degree(self) -> Optional[int]:
        return max(self.coeffs) if self.coeffs else None

    def shift(self, k: int) -> "Laurent1":
        return Laurent1({e + k: v for e, v in self.coeffs.items()})

    def leading_coeff(self) -> Fraction:
        return self.coeffs[max(self.coeffs)]

    def __repr__(self):
        if not self.coeffs:
            return "0"
        return " + ".join(f"{v}*t^{e}" for e, v in sorted(self.coeffs.items()))


def _polydivmod(a: Laurent1, b: Laurent1) -> tuple[Laurent1, Laurent1]:
    """Division of ordinary (non-negative exponent) polynomials."""
    r = dict(a.coeffs)
    q: dict[int, Fraction] = {}
    db = b.degree()
    lb = b.leading_coeff()
    while r:
        dr = max(r)
        if dr < db:
            break
        f = r[dr] / lb
        q[dr - db] = f
        for e, v in b.coeffs.items():
            e2 = e + dr - db
            r[e2] = r.get(e2, Fraction(0)) - f * v
            if r[e2] == 0:
                del r[e2]
    return Laurent1(q), Laurent1(r)


def _polygcd(a: Laurent1, b: Laurent1) -> Laurent1:
    while not b.is_zero():
        _, r = _polydivmod(a, b)
        a, b = b, r
    if a.is_zero():
        return a
    return Laurent1({e: v / a.leading_coeff() for e, v in a.coeffs.items()})


# bivariate Laurent polynomials over Q (s inner, t outer) ----------------------------


class Laurent2:
    """Laurent polynomial in s, t over Q: dict (t-exp, s-exp) -> Fraction."""

    __slots__ = ("coeffs",)

    def __init__(self, coeffs: dict):
        self.coeffs = {
            (int(et), int(es)): Fraction(v)
            for (et, es), v in coeffs.items()
            if Fraction(v) != 0
        }

    @staticmethod
    def const(q) -> "Laurent2":
        return Laurent2({(0, 0): Fraction(q)})

    @staticmethod
    def monomial(t_exp: int, s_exp: int, coeff=1) -> "Laurent2":
        return Laurent2({(t_exp, s_exp): Fraction(coeff)})

    def is_zero(self) -> bool:
        return not self.coeffs

    def __add__(self, o: "Laurent2") -> "Laurent2":
        c = dict(self.coeffs)
        for k, v in o.coeffs.items():
            c[k] = c.get(k, Fraction(0)) + v
        return Laurent2(c)

    def __neg__(self) -> "Laurent2":
        return Laurent2({k: -v for k, v in self.coeffs.items()})

    def __sub__(self, o: "Laurent2") -> "Laurent2":
        return self + (-o)

    def __mul__(self, o: "Laurent2") -> "Laurent2":
        c: dict[tuple[int, int], Fraction] = {}
        for (t1, s1), v1 in self.coeffs.items():
            for (t2, s2), v2 in o.coeffs.items():
                k = (t1 + t2, s1 + s2)
                c[k] = c.get(k, Fraction(0)) + v1 * v2
        return Laurent2(c)

    def __eq__(self, o) -> bool:
        return isinstance(o, Laurent2) and self.coeffs == o.coeffs

    def __hash__(self):
        return hash(frozenset(self.coeffs.items()))

    def ord(self) -> Optional[tuple[int, int]]:
        """(t-order, s-order of the lowest-t part), the rank-2 value."""
        if not self.coeffs:
            return None
        tmin = min(et for et, _ in self.coeffs)
        smin = min(es for et, es in self.coeffs if et == tmin)
        return (tmin, smin)

    def __repr__(self):
        if not self.coeffs:
            return "0"
        return " + ".join(f"{v}*t^{et}*s^{es}" for (et, es), v in sorted(self.coeffs.items()))


# field elements ------------------------------------------------------------------


INFINITY = None  # valuation of zero


@dataclass(frozen=True)
class QpElement:
    """Rational number under the p-adic valuation."""

    value: Fraction
    p: int

    def _check(self, o: "QpElement"):
        if self.p != o.p:
            raise FieldError("mixed primes")

    def __add__(self, o):
        self._check(o)
        return QpElement(self.value + o.value, self.p)

    def __sub__(self, o):
        self._check(o)
        return QpElement(self.value - o.value, self.p)

    def __mul__(self, o):
        self._check(o)
        return QpElement(self.value * o.value, self.p)

    def __neg__(self):
        return QpElement(-self.value, self.p)

    def is_zero(self) -> bool:
        return self.value == 0

    def inverse(self) -> "QpElement":
        return QpElement(1 / self.value, self.p)

    @property
    def rank(self) -> int:
        return 1

    def one_like(self):
        return QpElement(Fraction(1), self.p)

    def zero_like(self):
        return QpElement(Fraction(0), self.p)

    def valuation(self) -> Optional[LexValue]:
        if self.value == 0:
            return INFINITY
        n, d = self.value.numerator, self.value.denominator
        v = 0
        while n % self.p == 0:
            n //= self.p
            v += 1
        while d % self.p == 0:
            d //= self.p
            v -= 1
        return LexValue([v])


class RatFunc:
    """Element of Q(t): coprime numerator/denominator polynomial pair with
    monic denominator; Laurent input is normalized by shifting."""

    __slots__ = ("num", "den")

    def __init__(self, num: Laurent1, den: Laurent1):
        if den.is_zero():
            raise FieldError("zero denominator")
        if num.is_zero():
            self.num = Laurent1({})
            self.den = Laurent1.const(1)
            return
        # shift both to ordinary polynomials, keep the exact t-power balance
        shift = min(num.ord(), den.ord(), 0)
        n = num.shift(-shift)
        d = den.shift(-shift)
        # monomial denominators (the common case in matrix products) divide
        # out exactly; the polynomial gcd is only needed for true fractions
        if len(d.coeffs) > 1 and len(n.coeffs) > 1:
            g = _polygcd(n, d)
            n, _ = _polydivmod(n, g)
            d, _ = _polydivmod(d, g)
        # strip any remaining common t-power
        k = min(n.ord(), d.ord())
        n, d = n.shift(-k), d.shift(-k)
        lc = d.leading_coeff()
        self.num = Laurent1({e: v / lc for e, v in n.coeffs.items()})
        self.den = Laurent1({e: v / lc for e, v in d.coeffs.items()})

    @staticmethod
    def const(q) -> "RatFunc":
        return RatFunc(Laurent1.const(q), Laurent1.const(1))

    @staticmethod
    def t(power: int = 1) -> "RatFunc":
        return RatFunc(Laurent1.t(power), Laurent1.const(1))

    def __add__(self, o: "RatFunc") -> "RatFunc":
        return RatFunc(self.num * o.den + o.num * self.den, self.den * o.den)

    def __sub__(self, o: "RatFunc") -> "RatFunc":
        return RatFunc(self.num * o.den - o.num * self.den, self.den * o.den)

    def __mul__(self, o: "RatFunc") -> "RatFunc":
        return RatFunc(self.num * o.num, self.den * o.den)

    def __neg__(self) -> "RatFunc":
        return RatFunc(-self.num, self.den)

    def inverse(self) -> "RatFunc":
        if self.num.is_zero():
            raise FieldError("inverse of zero")
        return RatFunc(self.den, self.num)

    def is_zero(self) -> bool:
        return self.num.is_zero()

    def one_like(self):
        return RatFunc.const(1)

    def zero_like(self):
        return RatFunc.const(0)

    @property
    def rank(self) -> int:
        return 1

    def __eq__(self, o) -> bool:
        return isinstance(o, RatFunc) and self.num * o.den == o.num * self.den

    def __hash__(self):
        return hash((self.num, self.den))

    def valuation(self) -> Optional[LexValue]:
        if self.num.is_zero():
            return INFINITY
        return LexValue([self.num.ord() - self.den.ord()])

    def __repr__(self):
        return f"({self.num!r})/({self.den!r})"


class BiRatFunc:
    """Element of Q(s, t) under the rank-2 monomial valuation.  Canonical up
    to common monomial factors and scalar content (full bivariate gcds are
    not attempted; equality cross-multiplies, valuations are exact)."""

    __slots__ = ("num", "den")

    def __init__(self, num: Laurent2, den: Laurent2):
        if den.is_zero():
            raise FieldError("zero denominator")
        if num.is_zero():
            self.num = Laurent2({})
            self.den = Laurent2.const(1)
            return
        nt, ns = num.ord()
        dt, ds = den.ord()
        kt, ks = min(nt, dt), min(ns, ds)
        scale = den.coeffs[den.ord()]
        self.num = Laurent2(
            {(et - kt, es - ks): v / scale for (et, es), v in num.coeffs.items()}
        )
        self.den = Laurent2(
            {(et - kt, es - ks): v / scale for (et, es), v in den.coeffs.items()}
        )

    @staticmethod
    def const(q) -> "BiRatFunc":
        return BiRatFunc(Laurent2.const(q), Laurent2.const(1))

    @staticmethod
    def monomial(t_exp: int, s_exp: int, coeff=1) -> "BiRatFunc":
        return BiRatFunc(Laurent2.monomial(t_exp, s_exp, coeff), Laurent2.const(1))

    def __add__(self, o):
        return BiRatFunc(self.num * o.den + o.num * self.den, self.den * o.den)

    def __sub__(self, o):
        return BiRatFunc(self.num * o.den - o.num * self.den, self.den * o.den)

    def __mul__(self, o):
        return BiRatFunc(self.num * o.num, self.den * o.den)

    def __neg__(self):
        return BiRatFunc(-self.num, self.den)

    def inverse(self) -> "BiRatFunc":
        if self.num.is_zero():
            raise FieldError("inverse of zero")
        return BiRatFunc(self.den, self.num)

    def is_zero(self) -> bool:
        return self.num.is_zero()

    def one_like(self):
        return BiRatFunc.const(1)

    def zero_like(self):
        return BiRatFunc.const(0)

    @property
    def rank(self) -> int:
        return 2

    def __eq__(self, o) -> bool:
        return isinstance(o, BiRatFunc) and self.num * o.den == o.num * self.den

    def __hash__(self):
        return hash((self.num, self.den))

    def valuation(self) -> Optional[LexValue]:
        if self.num.is_zero():
            return INFINITY
        nt, ns = self.num.ord()
        dt, ds = self.den.ord()
        return LexValue([nt - dt, ns - ds])

    def __repr__(self):
        return f"({self.num!r})/({self.den!r})"


# 2x2 matrices ----------------------------------------------------------------------


class Mat2:
    """Determinant-1 matrix over a common field context."""

    __slots__ = ("a", "b", "c", "d")

    def __init__(self, a, b, c, d, check_det: bool = True):
        self.a, self.b, self.c, self.d = a, b, c, d
        if check_det:
            det = a * d - b * c
            if det != a.one_like():
                raise FieldError(f"determinant is not 1: {det!r}")

    def __mul__(self, o: "Mat2") -> "Mat2":
        return Mat2(
            self.a * o.a + self.b * o.c,
            self.a * o.b + self.b * o.d,
            self.c * o.a + self.d * o.c,
            self.c * o.b + self.d * o.d,
            check_det=False,
        )

    def inverse(self) -> "Mat2":
        return Mat2(self.d, -self.b, -self.c, self.a, check_det=False)

    def trace(self):
        return self.a + self.d

    def identity_like(self) -> "Mat2":
        one = self.a.one_like()
        zero = self.a.zero_like()
        return Mat2(one, zero, zero, one, check_det=False)

    def __eq__(self, o) -> bool:
        return (
            isinstance(o, Mat2)
            and self.a == o.a
            and self.b == o.b
            and self.c == o.c
            and self.d == o.d
        )

    def __hash__(self):
        return hash((self.a, self.b, self.c, self.d))

    def __repr__(self):
        return f"[[{self.a!r}, {self.b!r}], [{self.c!r}, {self.d!r}]]"

    @property
    def rank(self) -> int:
        return self.a.rank


def valuation(x) -> Optional[LexValue]:
    return x.valuation()


def bt_translation_length(m: Mat2) -> LexValue:
    """max(0, -2 v(Tr m)); Tr = 0 maps to 0 via the infinity convention."""
    v = m.trace().valuation()
    zero = LexValue.zero(m.rank)
    if v is INFINITY:
        return zero
    cand = v.scale(-2)
    return cand if cand > zero else zero


class MatrixLengthOracle:
    """Translation-length and triviality oracles for a labeled generator set;
    records the trace valuations encountered."""

    def __init__(self, generators: dict[str, Mat2]):
        if not generators:
            raise FieldError("empty generator set")
        ranks = {g.rank for g in generators.values()}
        if len(ranks) != 1:
            raise FieldError("generators over mixed field contexts")
        self.generators = dict(generators)
        self.rank = ranks.pop()
        self.identity = next(iter(generators.values())).identity_like()
        self.trace_valuations: set[tuple] = set()
        self._cache: dict[Word, Mat2] = {(): self.identity}

    def product(self, w: Word) -> Mat2:
        w = tuple(w)
        if w in self._cache:
            return self._cache[w]
        label, e = w[-1]
        if label not in self.generators:
            raise FieldError(f"unknown generator label {label!r}")
        g = self.generators[label]
        m = self.product(w[:-1]) * (g if e == 1 else g.inverse())
        self._cache[w] = m
        return m

    def length(self, w: Word) -> LexValue:
        m = self.product(w)
        v = m.trace().valuation()
        if v is not INFINITY:
            self.trace_valuations.add(tuple(v.coords))
        return bt_translation_length(m)

    def is_trivial(self, w: Word) -> bool:
        return self.product(w) == self.identity


def bt_length_oracle(generators: dict[str, Mat2]) -> MatrixLengthOracle:
    return MatrixLengthOracle(generators)


def value_group_rank(valuations: set[tuple]) -> int:
    """Q-rank of the subgroup of the value group generated by the given
    vectors (rational row rank)."""
    from .groups import rational_rank

    vecs = [list(v) for v in valuations if any(c != 0 for c in v)]
    if not vecs:
        return 0
    return rational_rank(vecs)


def certify_free_bt(generators: dict[str, Mat2], ball_radius: int):
    """Ball certification with the matrix oracles; the certificate records
    the finite set of trace valuations observed."""
    from .isometry import certify_free_on_ball

    oracle = bt_length_oracle(generators)
    cert = certify_free_on_ball(
        oracle.length, oracle.is_trivial, sorted(generators), ball_radius
    )
    cert.extra["trace_valuations"] = sorted(oracle.trace_valuations)
    cert.extra["value_group_rank"] = value_group_rank(oracle.trace_valuations)
    return cert


# JSON interface --------------------------------------------------------------------


def _parse_monomial_key(key: str) -> tuple[int, int]:
    """'1' -> (0,0); 't^-1' -> (-1,0); 's^2' -> (0,2); 's^2t^-1' -> (-1,2)."""
    key = key.strip()
    if key in ("1", ""):
        return (0, 0)
    t_exp = s_exp = 0
    i = 0
    while i < len(key):
        var = key[i]
        if var not in ("s", "t"):
            raise FieldError(f"bad monomial key {key!r}")
        i += 1
        exp = 1
        if i < len(key) and key[i] == "^":
            i += 1
            j = i
            if j < len(key) and key[j] == "-":
                j += 1
            while j < len(key) and key[j].isdigit():
                j += 1
            exp = int(key[i:j])
            i = j
        if var == "t":
            t_exp += exp
        else:
            s_exp += exp
    return (t_exp, s_exp)


def parse_entry(data, field: str, p: Optional[int] = None):
    """Matrix entry from JSON: a rational string, or a coefficient map."""
    if field == "Qp":
        if isinstance(data, dict):
            raise FieldError("Qp entries are rational strings")
        return QpElement(Fraction(str(data)), p)
    if isinstance(data, (str, int)):
        coeffs = {"1": str(data)}
    else:
        coeffs = data
    if field == "Qt":
        c = {}
        for key, val in coeffs.items():
            t_exp, s_exp = _parse_monomial_key(key)
            if s_exp:
                raise FieldError("s appears in a Qt entry")
            c[t_exp] = Fraction(str(val))
        return RatFunc(Laurent1(c), Laurent1.const(1))
    if field == "Qst":
        c2 = {}
        for key, val in coeffs.items():
            c2[_parse_monomial_key(key)] = Fraction(str(val))
        return BiRatFunc(Laurent2(c2), Laurent2.const(1))
    raise FieldError(f"unknown field context {field!r}")


def matrix_group_from_json(doc: dict) -> dict[str, Mat2]:
    field = doc["field"]
    p = doc.get("p")
    if field == "Qp" and not p:
        raise FieldError("Qp context needs a prime p")
    gens = {}
    for label, rows in doc["generators"].items():
        (a, b), (c, d) = rows
        gens[label] = Mat2(
            parse_entry(a, field, p),
            parse_entry(b, field, p),
            parse_entry(c, field, p),
            parse_entry(d, field, p),
        )
    return gens


def entry_to_json(x) -> dict | str:
    if isinstance(x, QpElement):
        return str(x.value)
    if isinstance(x, RatFunc):
        if len(x.den.coeffs) != 1:
            raise FieldError("only Laurent entries serialize")
        ((de, dv),) = x.den.coeffs.items()
        num = Laurent1({e - de: v / dv for e, v in x.num.coeffs.items()})
        out = {}
        for e, v in sorted(num.coeffs.items()):
            key = "1" if e == 0 else f"t^{e}"
            out[key] = str(v)
        return out or {"1": "0"}
    if isinstance(x, BiRatFunc):
        if len(x.den.coeffs) != 1:
            raise FieldError("only Laurent entries serialize")
        ((dk, dv),) = x.den.coeffs.items()
        num = Laurent2(
            {(et - dk[0], es - dk[1]): v / dv for (et, es), v in x.num.coeffs.items()}
        )
        out = {}
        for (et, es), v in sorted(num.coeffs.items()):
            parts = []
            if es:
                parts.append(f"s^{es}")
            if et:
                parts.append(f"t^{et}")
            out["".join(parts) or "1"] = str(v)
        return out or {"1": "0"}
    raise FieldError(f"cannot serialize {x!r}")


def matrix_group_to_json(field: str, gens: dict[str, Mat2], p: Optional[int] = None) -> dict:
    doc = {"field": field, "generators": {}}
    if p:
        doc["p"] = p
    for label, m in sorted(gens.items()):
        doc["generators"][label] = [
            [entry_to_json(m.a), entry_to_json(m.b)],
            [entry_to_json(m.c), entry_to_json(m.d)],
        ]
    return doc

#!/usr/bin/env python3
"""Independent reference values for the unit tests.

Re-implements the scalar number formats with Python's exact rationals and
writes tests/frozen/*.inc. The C++ library is never consulted, so the frozen
tables catch regressions in either direction.

Usage: python3 tools/oracle.py [output_dir]
"""

import random
import sys
from fractions import Fraction
from pathlib import Path


class Fp:
    def __init__(self, e, m, bias=None):
        self.e, self.m = e, m
        self.bias = (1 << (e - 1)) - 1 if bias is None else bias

    @property
    def bits(self):
        return 1 + self.e + self.m

    def name(self):
        return f"e{self.e}m{self.m}"

    def cpp(self):
        return f"FormatSpec::fp({self.e}, {self.m})"

    def decode(self, w):
        if w == 0:
            return Fraction(0)
        s = (w >> (self.e + self.m)) & 1
        ef = (w >> self.m) & ((1 << self.e) - 1)
        mf = w & ((1 << self.m) - 1)
        v = (1 + Fraction(mf, 1 << self.m)) * Fraction(2) ** (ef - self.bias)
        return -v if s else v

    def encode(self, v):
        """Truncate toward zero, saturate on overflow, flush on underflow."""
        if v == 0:
            return 0
        s = 1 if v < 0 else 0
        a = abs(v)
        exp = 0
        while a >= Fraction(2) ** (exp + 1):
            exp += 1
        while a < Fraction(2) ** exp:
            exp -= 1
        field = exp + self.bias
        emax = (1 << self.e) - 1
        if field > emax:
            field, man = emax, (1 << self.m) - 1
        elif field < 0:
            return 0
        else:
            frac = a / Fraction(2) ** exp - 1
            man = (frac.numerator << self.m) // frac.denominator
        word = (s << (self.e + self.m)) | (field << self.m) | man
        return word


class Int:
    def __init__(self, bits, signed=True):
        self.b, self.signed = bits, signed

    @property
    def bits(self):
        return self.b

    def name(self):
        return f"{'int' if self.signed else 'uint'}{self.b}"

    def cpp(self):
        return f"FormatSpec::integer({self.b}, {'true' if self.signed else 'false'})"

    def decode(self, w):
        if self.signed and (w >> (self.b - 1)) & 1:
            return Fraction(w - (1 << self.b))
        return Fraction(w)

    def encode(self, v):
        t = int(v)  # truncates toward zero
        lo, hi = (-(1 << (self.b - 1)), (1 << (self.b - 1)) - 1) if self.signed else (0, (1 << self.b) - 1)
        t = max(lo, min(hi, t))
        return t & ((1 << self.b) - 1)


def product_format(a, w):
    if isinstance(a, Fp):
        return Fp(max(a.e, w.e), a.m + w.m + 1)
    return Int(a.b + w.b, a.signed or w.signed)


def frac_cpp(f):
    """Dyadic rational as {negative, significand, exp2}."""
    den = f.denominator
    if den & (den - 1):
        raise ValueError(f"{f} is not dyadic")
    mag, exp = abs(f.numerator), -(den.bit_length() - 1)
    while mag and mag % 2 == 0:
        mag, exp = mag // 2, exp + 1
    if mag == 0:
        exp = 0
    return f"{{{'true' if f < 0 else 'false'}, {mag}u, {exp}}}"


def codec_vectors(rng):
    fmts = [Fp(2, 3), Fp(3, 2), Fp(2, 2), Fp(2, 1), Fp(4, 3), Fp(5, 2), Fp(5, 10), Fp(8, 7), Fp(1, 4), Fp(3, 0)]
    rows = []
    for f in fmts:
        words = {0, 1, (1 << f.bits) - 1, 1 << (f.bits - 1), (1 << (f.bits - 1)) - 1}
        while len(words) < 12:
            words.add(rng.randrange(1 << f.bits))
        for w in sorted(words):
            rows.append(f"{{{f.cpp()}, {w}u, {frac_cpp(f.decode(w))}}},")
    ints = [Int(4), Int(4, False), Int(8), Int(2)]
    for f in ints:
        for w in sorted({0, 1, (1 << f.bits) - 1, 1 << (f.bits - 1), rng.randrange(1 << f.bits)}):
            rows.append(f"{{{f.cpp()}, {w}u, {frac_cpp(f.decode(w))}}},")
    return rows


def encode_vectors(rng):
    rows = []
    for f in [Fp(2, 3), Fp(4, 3), Fp(2, 1), Fp(5, 10), Fp(3, 2)]:
        vals = [Fraction(0), Fraction(1), Fraction(-1), Fraction(1000), Fraction(-1000), Fraction(1, 1024),
                Fraction(2) ** -f.bias, -(Fraction(2) ** -f.bias), Fraction(45, 128), Fraction(-201, 64)]
        for _ in range(6):
            vals.append(Fraction(rng.randrange(-4096, 4096), rng.choice([1, 2, 16, 64, 1024])))
        for v in vals:
            rows.append(f"{{{f.cpp()}, {frac_cpp(v)}, {f.encode(v)}u}},")
    for f in [Int(4), Int(4, False), Int(8)]:
        for v in [Fraction(0), Fraction(7, 2), Fraction(-7, 2), Fraction(300), Fraction(-300), Fraction(5)]:
            rows.append(f"{{{f.cpp()}, {frac_cpp(v)}, {f.encode(v)}u}},")
    return rows


def mul_vectors(rng):
    pairs = [(Fp(2, 3), Fp(2, 3)), (Fp(2, 3), Fp(2, 2)), (Fp(4, 3), Fp(4, 3)), (Fp(5, 10), Fp(2, 1)),
             (Fp(3, 2), Fp(2, 3)), (Fp(2, 1), Fp(2, 1)), (Fp(1, 6), Fp(6, 1))]
    rows = []
    for a, w in pairs:
        out = product_format(a, w)
        for _ in range(10):
            aw, ww = rng.randrange(1 << a.bits), rng.randrange(1 << w.bits)
            p = a.decode(aw) * w.decode(ww)
            rows.append(f"{{{a.cpp()}, {w.cpp()}, {aw}u, {ww}u, {out.encode(p)}u, {a.encode(p)}u}},")
    for a, w in [(Int(4), Int(4)), (Int(8), Int(3)), (Int(4, False), Int(4, False))]:
        out = product_format(a, w)
        for _ in range(8):
            aw, ww = rng.randrange(1 << a.bits), rng.randrange(1 << w.bits)
            p = a.decode(aw) * w.decode(ww)
            rows.append(f"{{{a.cpp()}, {w.cpp()}, {aw}u, {ww}u, {out.encode(p)}u, {a.encode(p)}u}},")
    return rows


def dot_vectors(rng):
    """FP6 dot products: exact sum and its truncation into e5m10."""
    f = Fp(2, 3)
    rows = []
    for n in [1, 2, 4, 7, 16]:
        for _ in range(3):
            a = [rng.randrange(1 << 6) for _ in range(n)]
            w = [rng.randrange(1 << 6) for _ in range(n)]
            s = sum(f.decode(x) * f.decode(y) for x, y in zip(a, w))
            al = ", ".join(f"{x}u" for x in a)
            wl = ", ".join(f"{y}u" for y in w)
            rows.append(f"{{{{{al}}}, {{{wl}}}, {frac_cpp(s)}, {Fp(5, 10).encode(s)}u}},")
    return rows


def main():
    out = Path(sys.argv[1]) if len(sys.argv) > 1 else Path(__file__).resolve().parent.parent / "tests" / "frozen"
    out.mkdir(parents=True, exist_ok=True)
    rng = random.Random(20240601)
    header = "// Generated by tools/oracle.py; do not edit.\n"
    (out / "decode_vectors.inc").write_text(header + "\n".join(codec_vectors(rng)) + "\n")
    (out / "encode_vectors.inc").write_text(header + "\n".join(encode_vectors(rng)) + "\n")
    (out / "mul_vectors.inc").write_text(header + "\n".join(mul_vectors(rng)) + "\n")
    (out / "dot_vectors.inc").write_text(header + "\n".join(dot_vectors(rng)) + "\n")


if __name__ == "__main__":
    main()

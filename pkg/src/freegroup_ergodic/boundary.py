"""The boundary of F_r, its cylinder measure, and the double boundary.

Cylinders are admissible letter tuples.  Boundary points are eventually
periodic rays, which keeps every formula here a finite, exact computation.
Two-sided windows (``Window``) carry a start index and a tuple of symbols and
serve both as cylinders of the bi-infinite Markov shift and as finite views
of points in it.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Generic, Iterator, Sequence, TypeVar

from .errors import InputError, PreconditionError, RefinementRequired, check_cap
from .free_group import (
    IDENTITY,
    Word,
    alphabet,
    check_rank,
    common_prefix_length,
    format_word,
    inverse,
    is_reduced,
    multiply,
    parse_word,
    sphere,
)

Cylinder = tuple[int, ...]
S = TypeVar("S")


# ---------------------------------------------------------------------------
# boundary points and cylinders

def _primitive_root(period: tuple[int, ...]) -> tuple[int, ...]:
    n = len(period)
    for d in range(1, n + 1):
        if n % d == 0 and period[:d] * (n // d) == period:
            return period[:d]
    return period


@dataclass(frozen=True)
class BoundaryPoint:
    """The ray ``preperiod + period + period + ...`` stored in canonical form."""

    preperiod: tuple[int, ...]
    period: tuple[int, ...]

    def __post_init__(self):
        pre, per = tuple(self.preperiod), tuple(self.period)
        if not per:
            raise InputError("period must be nonempty")
        seq = pre + per + per[:1]
        if not is_reduced(seq):
            raise InputError(f"inadmissible boundary point {format_word(pre)}({format_word(per)})")
        per = _primitive_root(per)
        while pre and pre[-1] == per[-1]:
            pre = pre[:-1]
            per = per[-1:] + per[:-1]
        object.__setattr__(self, "preperiod", pre)
        object.__setattr__(self, "period", per)

    @classmethod
    def parse(cls, text: str) -> BoundaryPoint:
        """``"ab(ab)"`` -> preperiod ab, period ab."""
        text = text.strip()
        if "(" not in text or not text.endswith(")"):
            raise InputError(f"boundary point needs a parenthesized period: {text!r}")
        pre, per = text[:-1].split("(", 1)
        return cls(parse_word(pre, reduced=False), parse_word(per, reduced=False))

    def __str__(self) -> str:
        pre = format_word(self.preperiod) if self.preperiod else ""
        return f"{pre}({format_word(self.period)})"

    def letter(self, i: int) -> int:
        """xi_i, 1-based."""
        if i <= len(self.preperiod):
            return self.preperiod[i - 1]
        return self.period[(i - len(self.preperiod) - 1) % len(self.period)]

    def prefix(self, n: int) -> Cylinder:
        return tuple(self.letter(i) for i in range(1, n + 1))

    def drop(self, k: int) -> BoundaryPoint:
        """The ray (xi_{k+1}, xi_{k+2}, ...)."""
        if k <= len(self.preperiod):
            return BoundaryPoint(self.preperiod[k:], self.period)
        j = (k - len(self.preperiod)) % len(self.period)
        return BoundaryPoint((), self.period[j:] + self.period[:j])

    def prepend(self, letters: Sequence[int]) -> BoundaryPoint:
        return BoundaryPoint(tuple(letters) + self.preperiod, self.period)

    def in_cylinder(self, c: Cylinder) -> bool:
        return self.prefix(len(c)) == tuple(c)


def check_cylinder(c: Sequence[int], r: int | None = None) -> Cylinder:
    c = tuple(c)
    if r is not None:
        for s in c:
            if s == 0 or abs(s) > r:
                raise InputError(f"letter {s} outside F_{r}")
    if not is_reduced(c):
        raise InputError(f"inadmissible cylinder {format_word(c)}")
    return c


def cylinders(depth: int, r: int) -> tuple[Cylinder, ...]:
    """All admissible prefixes of the given depth, in canonical order."""
    return sphere(depth, r)


def refinements(c: Cylinder, depth: int, r: int) -> Iterator[Cylinder]:
    """Depth-``depth`` subcylinders of c, in canonical order."""
    if depth < len(c):
        raise PreconditionError("refinement depth below cylinder depth")
    letters = alphabet(r)

    def grow(w: Cylinder) -> Iterator[Cylinder]:
        if len(w) == depth:
            yield w
            return
        for s in letters:
            if w and s == -w[-1]:
                continue
            yield from grow(w + (s,))

    yield from grow(tuple(c))


def cylinder_measure(c: Sequence[int], r: int) -> Fraction:
    """nu[c] = (2r-1)^{-n+1} (2r)^{-1} for depth n >= 1."""
    check_rank(r)
    n = len(c)
    if n == 0:
        return Fraction(1)
    return Fraction(1, 2 * r * (2 * r - 1) ** (n - 1))


def sample_points(r: int, count: int, seed: int = 0, max_pre: int = 3, max_period: int = 3) -> list[BoundaryPoint]:
    """Deterministic pseudo-random eventually periodic points."""
    import random

    rng = random.Random(seed)
    letters = alphabet(r)
    out: list[BoundaryPoint] = []
    while len(out) < count:
        pre = []
        for _ in range(rng.randint(0, max_pre)):
            pre.append(rng.choice([s for s in letters if not pre or s != -pre[-1]]))
        per: list[int] = []
        for _ in range(rng.randint(1, max_period)):
            prev = per[-1] if per else (pre[-1] if pre else None)
            per.append(rng.choice([s for s in letters if prev is None or s != -prev]))
        try:
            p = BoundaryPoint(tuple(pre), tuple(per))
        except InputError:
            continue
        if p not in out:
            out.append(p)
    return out


# ---------------------------------------------------------------------------
# the boundary action

def cancellation(g: Word, xi: BoundaryPoint) -> int:
    """Largest k <= |g| with xi_i^-1 = g_{n+1-i} for all i <= k."""
    n = len(g)
    k = 0
    while k < n and xi.letter(k + 1) == -g[n - 1 - k]:
        k += 1
    return k


def boundary_action(g: Word, xi: BoundaryPoint) -> tuple[BoundaryPoint, int]:
    k = cancellation(g, xi)
    return xi.drop(k).prepend(g[: len(g) - k]), k


def rn_derivative(g: Word, xi: BoundaryPoint, r: int) -> Fraction:
    """d(nu o g)/d nu at xi, equal to (2r-1)^{2k-n}."""
    k = cancellation(g, xi)
    return Fraction(2 * r - 1) ** (2 * k - len(g))


def r_lambda(g: Word, xi: BoundaryPoint) -> int:
    """log_lambda of the RN derivative with lambda = 1/(2r-1); equals |g| - 2k."""
    return len(g) - 2 * cancellation(g, xi)


def cylinder_image(g: Word, c: Cylinder) -> tuple[Cylinder, int]:
    """g.[c] as a cylinder together with the cancellation count.

    The image is a cylinder, and k is constant on [c], exactly when the
    cancellation of g against c stops before c is used up.
    """
    w, k = multiply(g, c)
    if k >= len(c) and len(g) > 0:
        raise PreconditionError(
            f"{format_word(g)} is not cylinder-to-cylinder on [{format_word(c)}]"
        )
    return w, k


def cylinder_rn(g: Word, c: Cylinder, r: int) -> Fraction:
    _, k = cylinder_image(g, c)
    return Fraction(2 * r - 1) ** (2 * k - len(g))


def cylinder_r_lambda(g: Word, c: Cylinder) -> int:
    _, k = cylinder_image(g, c)
    return len(g) - 2 * k


@dataclass(frozen=True)
class RatioCheck:
    g: Word
    cylinder: Cylinder
    image: Cylinder
    ratio: Fraction
    points_checked: int


def rn_derivative_vs_cylinder_ratio(g: Word, c: Cylinder, r: int, samples: int = 8) -> RatioCheck:
    """Compare nu(g.c)/nu(c) against the pointwise RN formula on points of [c]."""
    if len(c) < len(g) + 1:
        raise PreconditionError(f"cylinder depth {len(c)} < |g|+1 = {len(g) + 1}")
    image, _ = cylinder_image(g, c)
    ratio = cylinder_measure(image, r) / cylinder_measure(c, r)
    checked = 0
    for p in sample_points(r, 4 * samples, seed=len(c) * 7919 + len(g)):
        xi = p.prepend(c) if is_reduced(c + p.prefix(1)) else None
        if xi is None:
            continue
        value = rn_derivative(g, xi, r)
        if value != ratio:
            raise AssertionError(f"RN {value} != cylinder ratio {ratio} at {xi}")
        if boundary_action(g, xi)[0].prefix(len(image)) != image:
            raise AssertionError(f"g.xi left the image cylinder at {xi}")
        checked += 1
        if checked == samples:
            break
    return RatioCheck(g, tuple(c), image, ratio, checked)


# ---------------------------------------------------------------------------
# ratio set

def power_of(q: Fraction, base: int) -> int | None:
    """m with q == base**m, or None."""
    q = Fraction(q)
    if q <= 0:
        return None
    num, den = q.numerator, q.denominator
    if num != 1 and den != 1:
        return None
    x, sign = (num, 1) if den == 1 else (den, -1)
    m = 0
    while x % base == 0:
        x //= base
        m += 1
    return sign * m if x == 1 else None


@dataclass(frozen=True)
class Witness:
    subset: Cylinder
    g: Word
    image: Cylinder
    ratio: Fraction


def ratio_set_witness(
    A: Cylinder, target: Fraction, r: int, max_length: int = 6, max_depth: int = 6
) -> Witness | None:
    """Search A' subset of A and g != e with g.A' subset of A and RN == target on A'.

    Exhaustive in the order (|g|, depth of A', canonical order).  ``None``
    means only that nothing was found within the bounds.
    """
    A = check_cylinder(A, r)
    target = Fraction(target)
    if power_of(target, 2 * r - 1) is None:
        raise InputError(f"{target} is not a power of {2 * r - 1}")
    for length in range(1, max_length + 1):
        for g in sphere(length, r):
            for depth in range(max(len(A), 1), max_depth + 1):
                for sub in refinements(A, depth, r):
                    w, k = multiply(g, sub)
                    if k >= len(sub):
                        continue
                    if Fraction(2 * r - 1) ** (2 * k - length) != target:
                        continue
                    if w[: len(A)] == A and len(w) >= len(A):
                        return Witness(sub, g, w, target)
    return None


# ---------------------------------------------------------------------------
# double boundary

@dataclass(frozen=True)
class ProductCylinder:
    b_prefix: Cylinder
    c_prefix: Cylinder

    def __post_init__(self):
        check_cylinder(self.b_prefix)
        check_cylinder(self.c_prefix)

    def translate(self, g: Word) -> ProductCylinder:
        return ProductCylinder(cylinder_image(g, self.b_prefix)[0], cylinder_image(g, self.c_prefix)[0])


def dbl_measure(pc: ProductCylinder, r: int) -> Fraction:
    """nu-bar of a rectangle with density (2r)(2r-1)^{2d-1} d(nu x nu).

    d is the common-prefix length of the two rays.  It is constant on the
    rectangle only if the prefixes disagree somewhere; otherwise the
    rectangle meets the diagonal strata, whose masses (2r-2)(2r-1)^{d-1}
    grow without bound, so no finite value exists.
    """
    b, c = pc.b_prefix, pc.c_prefix
    d = common_prefix_length(b, c)
    if d == min(len(b), len(c)):
        raise RefinementRequired(
            f"common prefix of [{format_word(b)}] x [{format_word(c)}] is not determined"
        )
    density = Fraction(2 * r) * Fraction(2 * r - 1) ** (2 * d - 1)
    return density * cylinder_measure(b, r) * cylinder_measure(c, r)


def diagonal_stratum_mass(d: int, r: int) -> Fraction:
    """nu-bar of {(b, c): lcp(b, c) = d exactly}."""
    if d == 0:
        return Fraction(1)
    return Fraction((2 * r - 2) * (2 * r - 1) ** (d - 1))


def in_domain(b: Cylinder, c: Cylinder) -> bool:
    return len(b) > 0 and len(c) > 0 and b[0] != c[0]


@dataclass(frozen=True)
class Window(Generic[S]):
    """Symbols at consecutive integer positions ``start .. start+len-1``."""

    start: int
    symbols: tuple

    @property
    def stop(self) -> int:
        return self.start + len(self.symbols) - 1

    def covers(self, lo: int, hi: int) -> bool:
        return lo > hi or (self.start <= lo and hi <= self.stop)

    def __getitem__(self, i: int):
        if not self.start <= i <= self.stop:
            raise PreconditionError(f"index {i} outside window [{self.start}, {self.stop}]")
        return self.symbols[i - self.start]

    def shift(self, n: int) -> Window:
        """T^n with (T xi)_i = xi_{i+1}."""
        return Window(self.start - n, self.symbols)

    def restrict(self, lo: int, hi: int) -> Window:
        if not self.covers(lo, hi):
            raise PreconditionError(f"window [{self.start}, {self.stop}] does not cover [{lo}, {hi}]")
        return Window(lo, self.symbols[lo - self.start : hi - self.start + 1])

    def __str__(self) -> str:
        if self.symbols and isinstance(self.symbols[0], tuple):
            body = ",".join(format_word(s) for s in self.symbols)
        else:
            body = format_word(self.symbols)
        return f"{self.start}:{body}"

    @classmethod
    def parse(cls, text: str) -> Window:
        start, body = text.split(":", 1)
        return cls(int(start), parse_word(body, reduced=False))


def check_two_sided(w: Window) -> Window:
    if not is_reduced(w.symbols):
        raise InputError(f"inadmissible two-sided window {w}")
    return w


def two_sided_windows(start: int, length: int, r: int) -> tuple[Window, ...]:
    return tuple(Window(start, s) for s in sphere(length, r))


def phi_embed(b: Cylinder, c: Cylinder) -> Window:
    """Phi(b, c)_i = b_{-i}^-1 for i < 0 and c_{i+1} for i >= 0."""
    if not in_domain(b, c):
        raise PreconditionError("(b, c) is not in the domain D (needs b_1 != c_1)")
    symbols = inverse(tuple(b)) + tuple(c)
    w = Window(-len(b), symbols)
    if not is_reduced(symbols):
        raise AssertionError(f"Phi produced an inadmissible window {w}")
    return w


def phi_inverse(w: Window) -> tuple[Cylinder, Cylinder]:
    if w.start > -1 or w.stop < 0:
        raise PreconditionError("window must straddle the origin")
    b = inverse(w.restrict(w.start, -1).symbols)
    c = w.restrict(0, w.stop).symbols
    return b, c


def markov_cylinder_measure(w: Window, r: int) -> Fraction:
    """nu'[C(s_m..s_n)] = (2r)^{-1} (2r-1)^{m-n}."""
    check_rank(r)
    check_two_sided(w)
    if not w.symbols:
        return Fraction(1)
    return Fraction(1, 2 * r * (2 * r - 1) ** (len(w.symbols) - 1))


def alpha_prime(n: int, xi: Window) -> Word:
    """Shift cocycle alpha'(T^n xi, xi)."""
    if n == 0:
        return IDENTITY
    if n > 0:
        if not xi.covers(0, n - 1):
            raise PreconditionError(f"window {xi} does not cover [0, {n - 1}]")
        return inverse(tuple(xi[i] for i in range(0, n)))
    if not xi.covers(n, -1):
        raise PreconditionError(f"window {xi} does not cover [{n}, -1]")
    return tuple(xi[i] for i in range(n, 0))


def domain_returns(b: Cylinder, c: Cylinder, max_length: int, r: int) -> list[tuple[Word, int]]:
    """Elements g with |g| <= max_length mapping the rectangle [b]x[c] of D into D.

    Each is paired with the m for which Phi(g(b, c)) = T^m Phi(b, c).  Raises
    if some returning g is not of the form (b_1..b_n)^-1 or (c_1..c_n)^-1, or if
    the conjugacy to the shift fails on the visible window.
    """
    if not in_domain(b, c):
        raise PreconditionError("rectangle not in D")
    if min(len(b), len(c)) < max_length + 1:
        raise PreconditionError("rectangle too shallow for the requested |g|")
    base = phi_embed(b, c)
    out = []
    for length in range(0, max_length + 1):
        for g in sphere(length, r):
            gb, _ = cylinder_image(g, b)
            gc, _ = cylinder_image(g, c)
            if not in_domain(gb, gc):
                continue
            n = len(g)
            if g == inverse(tuple(c[:n])):
                m = n
            elif g == inverse(tuple(b[:n])):
                m = -n
            else:
                raise AssertionError(f"{format_word(g)} returns to D but is not a prefix inverse")
            moved = phi_embed(gb, gc)
            shifted = base.shift(m)
            lo, hi = max(moved.start, shifted.start), min(moved.stop, shifted.stop)
            if moved.restrict(lo, hi) != shifted.restrict(lo, hi):
                raise AssertionError(f"Phi does not conjugate {format_word(g)} to T^{m}")
            if alpha_prime(m, base) != g:
                raise AssertionError(f"alpha'({m}) != {format_word(g)}")
            out.append((g, m))
    return out


def product_rectangles(depth: int, r: int, in_d: bool | None = None) -> Iterator[ProductCylinder]:
    check_cap(len(cylinders(depth, r)) ** 2, "product rectangles")
    cs = cylinders(depth, r)
    for b, c in itertools.product(cs, cs):
        if in_d is None or in_domain(b, c) == in_d:
            yield ProductCylinder(b, c)

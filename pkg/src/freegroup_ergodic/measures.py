"""Finitely supported rational probability measures on F_r."""

from __future__ import annotations

import json
from collections import Counter, defaultdict
from fractions import Fraction
from types import MappingProxyType
from typing import Iterable, Iterator, Mapping

from .errors import InputError, check_cap
from .free_group import IDENTITY, Word, format_word, inverse, multiply, parse_word, sphere, word_key


def parse_fraction(text) -> Fraction:
    if isinstance(text, Fraction):
        return text
    if isinstance(text, int):
        return Fraction(text)
    if isinstance(text, str):
        try:
            return Fraction(text.strip())
        except (ValueError, ZeroDivisionError) as exc:
            raise InputError(f"not a rational: {text!r}") from exc
    raise InputError(f"rationals must be given as 'p/q' strings, got {text!r}")


def format_fraction(q: Fraction) -> str:
    return f"{q.numerator}/{q.denominator}"


class GroupMeasure(Mapping[Word, Fraction]):
    """Probability measure on F_r with finite support and exact weights.

    Zero weights are dropped, so two measures are equal iff their supports and
    weights agree.  Construction fails unless the total mass is exactly 1.
    """

    __slots__ = ("_w",)

    def __init__(self, weights: Mapping[Word, Fraction] | Iterable[tuple[Word, Fraction]]):
        items = weights.items() if isinstance(weights, Mapping) else weights
        w: dict[Word, Fraction] = {}
        for g, p in items:
            if not isinstance(p, Fraction):
                p = Fraction(p)
            if p < 0:
                raise InputError(f"negative weight {p} at {format_word(g)}")
            if p:
                g = tuple(g)
                w[g] = w[g] + p if g in w else p
        # weights repeat heavily (uniform spheres), so total by distinct value
        # keyed by int pairs since Fraction hashing is slow
        tally = Counter((p.numerator, p.denominator) for p in w.values())
        total = sum((Fraction(a, b) * k for (a, b), k in tally.items()), Fraction(0))
        if total != 1:
            raise InputError(f"total mass is {total}, not 1")
        self._w = MappingProxyType(dict(sorted(w.items(), key=lambda kv: word_key(kv[0]))))

    def __getitem__(self, g: Word) -> Fraction:
        return self._w.get(tuple(g), Fraction(0))

    def __iter__(self) -> Iterator[Word]:
        return iter(self._w)

    def __len__(self) -> int:
        return len(self._w)

    def __contains__(self, g) -> bool:
        return tuple(g) in self._w

    def __eq__(self, other) -> bool:
        if isinstance(other, GroupMeasure):
            return dict(self._w) == dict(other._w)
        return NotImplemented

    def __hash__(self):
        return hash(frozenset(self._w.items()))

    def __repr__(self) -> str:
        body = ", ".join(f"{format_word(g)}: {p}" for g, p in list(self._w.items())[:8])
        more = ", ..." if len(self._w) > 8 else ""
        return f"GroupMeasure({{{body}{more}}})"

    @property
    def support(self) -> tuple[Word, ...]:
        return tuple(self._w)

    def mass(self) -> Fraction:
        return sum(self._w.values(), Fraction(0))

    def max_length(self) -> int:
        return max(len(g) for g in self._w)

    def reflected(self) -> GroupMeasure:
        """The measure g -> self(g^-1)."""
        return GroupMeasure({inverse(g): p for g, p in self._w.items()})

    def is_symmetric(self) -> bool:
        return all(self[inverse(g)] == p for g, p in self._w.items())

    def to_json(self) -> dict[str, str]:
        return {format_word(g): format_fraction(p) for g, p in self._w.items()}

    @classmethod
    def from_json(cls, data: Mapping[str, str] | str, r: int | None = None) -> GroupMeasure:
        if isinstance(data, str):
            data = json.loads(data)
        return cls((parse_word(k, r), parse_fraction(v)) for k, v in data.items())


def dirac(g: Word = IDENTITY) -> GroupMeasure:
    return GroupMeasure({g: Fraction(1)})


def uniform(words: Iterable[Word]) -> GroupMeasure:
    words = list(words)
    if not words or len(set(words)) != len(words):
        raise InputError("uniform measure needs a nonempty set of distinct words")
    p = Fraction(1, len(words))
    return GroupMeasure({g: p for g in words})


def mixture(measures: Iterable[GroupMeasure], coefficients: Iterable[Fraction] | None = None) -> GroupMeasure:
    measures = list(measures)
    if coefficients is None:
        coefficients = [Fraction(1, len(measures))] * len(measures)
    acc: dict[Word, Fraction] = defaultdict(Fraction)
    for c, m in zip(coefficients, measures, strict=True):
        for g, p in m.items():
            acc[g] += c * p
    return GroupMeasure(acc)


def convolve(k1: GroupMeasure, k2: GroupMeasure) -> GroupMeasure:
    """(k1 * k2)(g) = sum_h k1(g h^-1) k2(h)."""
    check_cap(len(k1) * len(k2), "convolution support product")
    acc: dict[Word, Fraction] = defaultdict(Fraction)
    for u, p in k1.items():
        for v, q in k2.items():
            acc[multiply(u, v)[0]] += p * q
    return GroupMeasure(acc)


def convolution_power(kappa: GroupMeasure, n: int) -> GroupMeasure:
    if n < 1:
        raise InputError(f"convolution power needs n >= 1, got {n}")
    out = kappa
    for _ in range(n - 1):
        out = convolve(out, kappa)
    return out


def cesaro_convolutions(kappa: GroupMeasure, n: int) -> GroupMeasure:
    """rho_n = (1/n) sum_{k=1}^n kappa^{*k}."""
    if n < 1:
        raise InputError(f"Cesaro average needs n >= 1, got {n}")
    powers = [kappa]
    for _ in range(n - 1):
        powers.append(convolve(powers[-1], kappa))
    return mixture(powers)


def sphere_uniform(n: int, r: int) -> GroupMeasure:
    """sigma_n, the uniform probability on the sphere of radius n."""
    return uniform(sphere(n, r))


def cesaro_spheres(n: int, r: int) -> GroupMeasure:
    """(1/(n+1)) sum_{i=0}^n sigma_i."""
    if n < 0:
        raise InputError(f"n must be >= 0, got {n}")
    return mixture(sphere_uniform(i, r) for i in range(n + 1))


def uniform_generators(r: int) -> GroupMeasure:
    return sphere_uniform(1, r)

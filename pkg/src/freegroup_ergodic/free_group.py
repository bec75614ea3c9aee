"""Reduced words in the free group F_r.

A letter is a nonzero int: ``+i`` is the generator a_i and ``-i`` its inverse.
A word is a tuple of letters; the identity is the empty tuple.  Letters are
ordered a_1 < a_1^-1 < a_2 < a_2^-1 < ... and every enumeration in the package
follows that order.

Words serialize as strings over ``a A b B c C ...`` (upper case = inverse),
with ``"e"`` for the identity.
"""

from __future__ import annotations

import functools
import string
from typing import Iterable, Iterator, Sequence

from .errors import InputError, check_cap

Word = tuple[int, ...]

IDENTITY: Word = ()


def check_rank(r: int) -> None:
    if not isinstance(r, int) or r < 2:
        raise InputError(f"rank must be an integer >= 2, got {r!r}")
    if r > 26:
        raise InputError("rank above 26 has no letter encoding")


def alphabet(r: int) -> tuple[int, ...]:
    """The 2r letters of F_r in canonical order."""
    check_rank(r)
    return tuple(s for i in range(1, r + 1) for s in (i, -i))


def letter_key(s: int) -> tuple[int, int]:
    return (abs(s), 0 if s > 0 else 1)


# a1 < A1 < a2 < ... as consecutive integers
_LETTER_CODE = {s: 2 * abs(s) - (s > 0) for i in range(1, 27) for s in (i, -i)}


def word_key(w: Word) -> tuple:
    """Sort key: shortlex in the canonical letter order."""
    return (len(w), tuple(map(_LETTER_CODE.__getitem__, w)))


def _check_letter(s: int, r: int | None) -> None:
    if not isinstance(s, int) or s == 0:
        raise InputError(f"invalid letter {s!r}")
    if r is not None and abs(s) > r:
        raise InputError(f"generator index {abs(s)} outside [1, {r}]")


def is_reduced(letters: Sequence[int]) -> bool:
    return all(letters[i + 1] != -letters[i] for i in range(len(letters) - 1))


def reduce(letters: Iterable[int], r: int | None = None) -> Word:
    """Free reduction; a stack pass reaches the fixed point of adjacent cancellation."""
    stack: list[int] = []
    for s in letters:
        _check_letter(s, r)
        if stack and stack[-1] == -s:
            stack.pop()
        else:
            stack.append(s)
    return tuple(stack)


def inverse(w: Word) -> Word:
    return tuple(-s for s in reversed(w))


def multiply(u: Word, v: Word) -> tuple[Word, int]:
    """Reduced product ``uv`` and the number of cancelled letter pairs."""
    k = 0
    n = min(len(u), len(v))
    while k < n and u[len(u) - 1 - k] == -v[k]:
        k += 1
    return u[: len(u) - k] + v[k:], k


def mul(*words: Word) -> Word:
    out: Word = IDENTITY
    for w in words:
        out = multiply(out, w)[0]
    return out


def sphere_size(n: int, r: int) -> int:
    check_rank(r)
    if n < 0:
        raise InputError(f"radius must be >= 0, got {n}")
    return 1 if n == 0 else 2 * r * (2 * r - 1) ** (n - 1)


def iter_sphere(n: int, r: int, first: Sequence[int] | None = None) -> Iterator[Word]:
    """Depth-first enumeration of S_n in canonical order, with last-letter exclusion."""
    letters = alphabet(r)
    if n < 0:
        raise InputError(f"radius must be >= 0, got {n}")
    if n == 0:
        yield IDENTITY
        return
    word: list[int] = []

    def extend(depth: int) -> Iterator[Word]:
        if depth == n:
            yield tuple(word)
            return
        for s in letters:
            if word and s == -word[-1]:
                continue
            word.append(s)
            yield from extend(depth + 1)
            word.pop()

    starts = letters if first is None else first
    for s in starts:
        word.append(s)
        yield from extend(1)
        word.pop()


@functools.lru_cache(maxsize=32)
def _sphere(n: int, r: int) -> tuple[Word, ...]:
    return tuple(iter_sphere(n, r))


def sphere(n: int, r: int) -> tuple[Word, ...]:
    """All reduced words of length n; refuses spheres larger than the cap."""
    check_cap(sphere_size(n, r), f"sphere S_{n} of F_{r}")
    return _sphere(n, r)


def ball(n: int, r: int) -> tuple[Word, ...]:
    out: list[Word] = []
    for m in range(n + 1):
        out.extend(sphere(m, r))
    return tuple(out)


def common_prefix_length(u: Sequence[int], v: Sequence[int]) -> int:
    k = 0
    for a, b in zip(u, v):
        if a != b:
            break
        k += 1
    return k


def format_word(w: Sequence[int]) -> str:
    if not w:
        return "e"
    out = []
    for s in w:
        c = string.ascii_lowercase[abs(s) - 1]
        out.append(c if s > 0 else c.upper())
    return "".join(out)


def parse_word(text: str, r: int | None = None, reduced: bool = True) -> Word:
    """Parse ``"aB"``-style text.  Non-reduced input is reduced unless ``reduced=False``."""
    text = text.strip()
    if text in ("", "e"):
        return IDENTITY
    letters = []
    for ch in text:
        if not ch.isalpha() or not ch.isascii():
            raise InputError(f"bad letter {ch!r} in word {text!r}")
        i = string.ascii_lowercase.index(ch.lower()) + 1
        letters.append(i if ch.islower() else -i)
    for s in letters:
        _check_letter(s, r)
    return reduce(letters, r) if reduced else tuple(letters)


def horofunction_prefix(xi_prefix: Sequence[int], g: Word) -> int:
    """|g| - 2 lcp(g, xi); ``xi_prefix`` must be longer than g."""
    return len(g) - 2 * common_prefix_length(g, xi_prefix)


def horofunction(xi, g: Word) -> int:
    """Busemann function h_xi(g) on the tree.

    Evaluated by the common-prefix formula and checked against the limit
    d(xi_n, g) - d(xi_n, e) for n = |g|+1 and |g|+2.
    """
    prefix = xi.prefix(len(g) + 2)
    value = horofunction_prefix(prefix, g)
    for n in (len(g) + 1, len(g) + 2):
        xi_n = tuple(prefix[:n])
        limit = len(multiply(inverse(xi_n), g)[0]) - n
        if limit != value:
            raise AssertionError(f"horofunction mismatch at depth {n}: {limit} != {value}")
    return value

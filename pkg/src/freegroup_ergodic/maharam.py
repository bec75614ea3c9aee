"""Discrete Maharam extension of the boundary action and the three relation instances.

Every instance is evaluated at cylinder resolution: it enumerates the cells
of its ground space at a given depth (with their exact masses) and, for an
index i, lists the leaf neighbors of a cell together with cocycle values and
weights.  Neither orbits nor infinite sequences are ever materialized.

=====================  ==========================  ==========================
instance               ground cells                neighbors at index i
=====================  ==========================  ==========================
TAIL                   boundary prefixes, nu        g.b, |g| = 2i, RN(g, b) = 1
RANDOM_WALK            windows x(1..d), kappa^Z     T^j x, 1 <= j <= i
DOUBLE_BOUNDARY_SHIFT  windows xi_0..xi_{d-1}, nu'  T^j xi, 0 <= j <= i
=====================  ==========================  ==========================
"""

from __future__ import annotations

import itertools
from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from typing import Hashable, Iterator, Protocol

from .boundary import (
    BoundaryPoint,
    Cylinder,
    Window,
    boundary_action,
    check_cylinder,
    cylinder_image,
    cylinder_measure,
    cylinders,
    markov_cylinder_measure,
    r_lambda,
    alpha_prime,
    check_two_sided,
)
from .errors import InputError, PreconditionError, check_cap
from .free_group import IDENTITY, Word, check_rank, format_word, inverse, mul, sphere
from .measures import GroupMeasure, uniform_generators


def fiber_weight(t: int, r: int) -> Fraction:
    """theta_lambda({t}) = lambda^{-t} with lambda = 1/(2r-1)."""
    return Fraction(2 * r - 1) ** t


@dataclass(frozen=True)
class MaharamPoint:
    xi: BoundaryPoint
    t: int


def maharam_act(g: Word, p: MaharamPoint) -> MaharamPoint:
    """g(b, t) = (gb, t + R_lambda(g, b))."""
    moved, _ = boundary_action(g, p.xi)
    return MaharamPoint(moved, p.t + r_lambda(g, p.xi))


@dataclass(frozen=True)
class InvarianceReport:
    g: Word
    cylinder: Cylinder
    t: int
    image: Cylinder
    image_t: int
    lhs: Fraction  # (nu x theta)(g.(c x {t}))
    rhs: Fraction  # (nu x theta)(c x {t})

    @property
    def ok(self) -> bool:
        return self.lhs == self.rhs


def check_maharam_invariance(g: Word, c: Cylinder, t: int, r: int) -> InvarianceReport:
    if len(c) < len(g) + 1:
        raise PreconditionError(f"cylinder depth {len(c)} < |g|+1 = {len(g) + 1}")
    image, k = cylinder_image(g, c)
    image_t = t + len(g) - 2 * k
    lhs = cylinder_measure(image, r) * fiber_weight(image_t, r)
    rhs = cylinder_measure(c, r) * fiber_weight(t, r)
    report = InvarianceReport(tuple(g), tuple(c), t, image, image_t, lhs, rhs)
    if not report.ok:
        raise AssertionError(
            f"Maharam measure not preserved: g={format_word(g)} c={format_word(c)} t={t}: {lhs} != {rhs}"
        )
    return report


def invariance_sweep(r: int, max_length: int, depth: int, fibers: range) -> list[InvarianceReport]:
    out = []
    for length in range(max_length + 1):
        for g in sphere(length, r):
            for c in cylinders(depth, r):
                for t in fibers:
                    out.append(check_maharam_invariance(g, c, t, r))
    return out


# ---------------------------------------------------------------------------
# leaf neighborhoods

@dataclass(frozen=True)
class Neighbor:
    point: Hashable
    cocycle: Word
    weight: Fraction


@dataclass(frozen=True)
class LeafNeighborhood:
    base: Hashable
    neighbors: tuple[Neighbor, ...]

    def total_weight(self) -> Fraction:
        counts = Counter(n.weight for n in self.neighbors)
        return sum((w * k for w, k in counts.items()), Fraction(0))


def _merged(base, items: list[Neighbor]) -> LeafNeighborhood:
    """Merge repeated neighbor points; repeated points must carry one cocycle."""
    merged: dict = {}
    for n in items:
        if n.point in merged:
            prev = merged[n.point]
            if prev.cocycle != n.cocycle:
                raise AssertionError(f"neighbor {n.point} reached by two cocycle values")
            merged[n.point] = Neighbor(n.point, n.cocycle, prev.weight + n.weight)
        else:
            merged[n.point] = n
    hood = LeafNeighborhood(base, tuple(merged.values()))
    if hood.total_weight() != 1:
        raise AssertionError(f"leaf weights sum to {hood.total_weight()}")
    return hood


def tail_weight(n: int, r: int) -> Fraction:
    """omega_n mass of each neighbor: (2r-2)^{-1} (2r-1)^{-n+1}."""
    return Fraction(1, (2 * r - 2) * (2 * r - 1) ** (n - 1))


def tail_count(n: int, r: int) -> int:
    return (2 * r - 2) * (2 * r - 1) ** (n - 1)


def tail_moves(n: int, c: Cylinder, r: int) -> Iterator[tuple[Word, Cylinder]]:
    """Elements g with |g| = 2n and RN(g, .) = 1 on [c], with the image cylinders.

    Such g cancel exactly n letters: g = t_1..t_n c_n^-1..c_1^-1 with
    t_n not in {c_n, c_{n+1}^-1}.
    """
    if n < 1:
        raise InputError(f"tail index must be >= 1, got {n}")
    if len(c) < n + 1:
        raise PreconditionError(f"cylinder depth {len(c)} < n+1 = {n + 1}")
    tail = inverse(tuple(c[:n]))
    for head in sphere(n, r):
        if head[-1] in (c[n - 1], -c[n]):
            continue
        # exactly n letters cancel, so g.c drops c_1..c_n and keeps head
        yield head + tail, head + tuple(c[n:])


def tail_neighborhood(n: int, xi, r: int) -> LeafNeighborhood:
    """omega_n(., xi) for the tail relation; xi is a cylinder of depth >= n+1 or a point."""
    weight = tail_weight(n, r)
    if isinstance(xi, BoundaryPoint):
        c = xi.prefix(n + 1)
        items = [Neighbor(boundary_action(g, xi)[0], g, weight) for g, _ in tail_moves(n, c, r)]
    else:
        c = check_cylinder(xi, r)
        items = [Neighbor(image, g, weight) for g, image in tail_moves(n, c, r)]
    if len(items) != tail_count(n, r):
        raise AssertionError(f"tail neighborhood has {len(items)} elements, expected {tail_count(n, r)}")
    return _merged(xi, items)


def rw_cocycle(x: Window, n: int) -> Word:
    """alpha(x, T^n x) for the random-walk shift; symbols of x are words."""
    if n == 0:
        return IDENTITY
    if n > 0:
        if not x.covers(1, n):
            raise PreconditionError(f"window {x} does not cover [1, {n}]")
        return mul(*(x[j] for j in range(1, n + 1)))
    if not x.covers(n + 1, 0):
        raise PreconditionError(f"window {x} does not cover [{n + 1}, 0]")
    return mul(*(inverse(x[j]) for j in range(0, n, -1)))


def rw_neighborhood(n: int, x: Window) -> LeafNeighborhood:
    if n < 1:
        raise InputError(f"random-walk index must be >= 1, got {n}")
    if not x.covers(1, n):
        raise PreconditionError(f"window {x} does not cover [1, {n}]")
    w = Fraction(1, n)
    return _merged(x, [Neighbor(x.shift(i), rw_cocycle(x, i), w) for i in range(1, n + 1)])


def dbl_shift_neighborhood(n: int, xi: Window) -> LeafNeighborhood:
    if n < 0:
        raise InputError(f"shift index must be >= 0, got {n}")
    if not xi.covers(0, n - 1):
        raise PreconditionError(f"window {xi} does not cover [0, {n - 1}]")
    w = Fraction(1, n + 1)
    return _merged(xi, [Neighbor(xi.shift(i), alpha_prime(i, xi), w) for i in range(0, n + 1)])


# ---------------------------------------------------------------------------
# relation instances

class RelationInstance(Protocol):
    name: str
    r: int

    def depth(self, i: int) -> int:
        """Cell depth at which omega_i and the cocycle are cell-constant."""

    def cells(self, depth: int) -> Iterator[tuple[Hashable, Fraction]]:
        """Ground-space cells of the given depth and their exact masses."""

    def neighborhood(self, i: int, cell) -> LeafNeighborhood: ...

    def coarsen(self, point, depth: int): ...

    def first_index(self) -> int: ...


@dataclass(frozen=True)
class TailRelation:
    r: int
    name: str = "TAIL"

    def __post_init__(self):
        check_rank(self.r)

    def first_index(self) -> int:
        return 1

    def depth(self, i: int) -> int:
        return i + 1

    def cells(self, depth: int) -> Iterator[tuple[Cylinder, Fraction]]:
        mass = cylinder_measure((1,) * depth, self.r)
        for c in cylinders(depth, self.r):
            yield c, mass

    def neighborhood(self, i: int, cell: Cylinder) -> LeafNeighborhood:
        return tail_neighborhood(i, cell, self.r)

    def coarsen(self, point: Cylinder, depth: int) -> Cylinder:
        return point[:depth]


@dataclass(frozen=True)
class RandomWalkRelation:
    kappa: GroupMeasure
    r: int
    name: str = "RANDOM_WALK"

    def first_index(self) -> int:
        return 1

    def depth(self, i: int) -> int:
        return i

    def cells(self, depth: int) -> Iterator[tuple[Window, Fraction]]:
        support = self.kappa.support
        check_cap(len(support) ** depth, "random-walk windows")
        for xs in itertools.product(support, repeat=depth):
            mass = Fraction(1)
            for s in xs:
                mass *= self.kappa[s]
            yield Window(1, xs), mass

    def neighborhood(self, i: int, cell: Window) -> LeafNeighborhood:
        return rw_neighborhood(i, cell)

    def coarsen(self, point: Window, depth: int) -> Window:
        return Window(point.start, point.symbols[:depth])


@dataclass(frozen=True)
class DoubleBoundaryShift:
    r: int
    name: str = "DOUBLE_BOUNDARY_SHIFT"

    def __post_init__(self):
        check_rank(self.r)

    def first_index(self) -> int:
        return 0

    def depth(self, i: int) -> int:
        return max(i, 1)

    def cells(self, depth: int) -> Iterator[tuple[Window, Fraction]]:
        for s in sphere(depth, self.r):
            w = Window(0, s)
            yield w, markov_cylinder_measure(w, self.r)

    def neighborhood(self, i: int, cell: Window) -> LeafNeighborhood:
        return dbl_shift_neighborhood(i, check_two_sided(cell))

    def coarsen(self, point: Window, depth: int) -> Window:
        return Window(point.start, point.symbols[:depth])


INSTANCE_NAMES = ("TAIL", "RANDOM_WALK", "DOUBLE_BOUNDARY_SHIFT")


def make_instance(name: str, r: int, kappa: GroupMeasure | None = None):
    name = name.upper()
    if name == "TAIL":
        return TailRelation(r)
    if name == "RANDOM_WALK":
        return RandomWalkRelation(kappa if kappa is not None else uniform_generators(r), r)
    if name == "DOUBLE_BOUNDARY_SHIFT":
        return DoubleBoundaryShift(r)
    raise InputError(f"unknown relation instance {name!r}; expected one of {INSTANCE_NAMES}")


def check_resolution(instance, i: int, extra: int = 2) -> None:
    """Refining the declared depth by ``extra`` must not change any neighborhood."""
    depth = instance.depth(i)
    coarse = {cell: instance.neighborhood(i, cell) for cell, _ in instance.cells(depth)}
    for cell, _ in instance.cells(depth + extra):
        parent = instance.coarsen(cell, depth)
        fine = instance.neighborhood(i, cell)
        got = sorted(((instance.coarsen(n.point, depth), n.cocycle, n.weight) for n in fine.neighbors), key=repr)
        want = sorted(((n.point, n.cocycle, n.weight) for n in coarse[parent].neighbors), key=repr)
        if got != want:
            raise AssertionError(f"{instance.name} index {i}: refinement of {parent} changed the neighborhood")

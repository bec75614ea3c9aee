"""Finite measure-preserving actions of F_r and the averaging operators on them.

The central computation is the push-forward of leafwise weights through the
cocycle of a relation instance,

    zeta_i(gamma) = int_B int_K sum_{c : alpha(c, kb) = gamma} omega_i(c, kb) psi(b) dk dnu(b),

done exactly as a finite sum over the instance's cells.
"""

from __future__ import annotations

import json
import math
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from pathlib import Path
from typing import Callable, Hashable, Iterable, Mapping, Sequence

from .errors import InputError, PreconditionError
from .free_group import Word, alphabet, format_word, inverse
from .maharam import tail_moves
from .measures import GroupMeasure, format_fraction, parse_fraction
from .boundary import cylinders

Observable = tuple  # values indexed by the points 0..n-1


# ---------------------------------------------------------------------------
# finite actions

@dataclass(frozen=True)
class FiniteAction:
    """F_r acting on {0, ..., n-1} by one permutation per generator a_1..a_r."""

    weights: tuple[Fraction, ...]
    generators: tuple[tuple[int, ...], ...]
    name: str = field(default="", compare=False)

    def __post_init__(self):
        n = len(self.weights)
        object.__setattr__(self, "weights", tuple(Fraction(w) for w in self.weights))
        object.__setattr__(self, "generators", tuple(tuple(p) for p in self.generators))
        if n == 0:
            raise InputError("action needs at least one point")
        if any(w <= 0 for w in self.weights) or sum(self.weights) != 1:
            raise InputError("weights must be positive and sum to 1")
        if len(self.generators) < 2:
            raise InputError("need a permutation for each of r >= 2 generators")
        for i, p in enumerate(self.generators, 1):
            if sorted(p) != list(range(n)):
                raise InputError(f"generator {format_word((i,))} is not a permutation of {n} points")
            if any(self.weights[p[x]] != self.weights[x] for x in range(n)):
                raise InputError(f"generator {format_word((i,))} does not preserve the measure")

    @property
    def size(self) -> int:
        return len(self.weights)

    @property
    def rank(self) -> int:
        return len(self.generators)

    @cached_property
    def _letter_perms(self) -> dict[int, tuple[int, ...]]:
        out = {}
        for i, p in enumerate(self.generators, 1):
            inv = [0] * len(p)
            for x, y in enumerate(p):
                inv[y] = x
            out[i] = p
            out[-i] = tuple(inv)
        return out

    def letter_perm(self, s: int) -> tuple[int, ...]:
        try:
            return self._letter_perms[s]
        except KeyError:
            raise InputError(f"letter {s} outside F_{self.rank}") from None

    def word_perm(self, w: Word) -> tuple[int, ...]:
        """x -> w.x, where s_1..s_n acts as s_1 o ... o s_n."""
        p = tuple(range(self.size))
        for s in w:
            q = self.letter_perm(s)
            p = tuple(p[q[x]] for x in range(self.size))
        return p

    def act(self, w: Word, x: int) -> int:
        for s in reversed(w):
            x = self.letter_perm(s)[x]
        return x

    # -- io

    @classmethod
    def cyclic(cls, n: int, steps: Sequence[int], name: str = "") -> FiniteAction:
        """Z/n with generator a_i acting by x -> x + steps[i]."""
        return cls(
            tuple(Fraction(1, n) for _ in range(n)),
            tuple(tuple((x + s) % n for x in range(n)) for s in steps),
            name=name or f"Z/{n} steps {list(steps)}",
        )

    @classmethod
    def from_json(cls, data: Mapping | str, name: str = "") -> FiniteAction:
        if isinstance(data, str):
            data = json.loads(data)
        n = data["points"]
        if not isinstance(n, int) or n < 1:
            raise InputError("'points' must be a positive integer")
        weights = data.get("weights")
        weights = tuple(parse_fraction(w) for w in weights) if weights is not None else (Fraction(1, n),) * n
        if len(weights) != n:
            raise InputError("'weights' length differs from 'points'")
        gens = []
        for i in range(1, 27):
            key = chr(ord("a") + i - 1)
            if key not in data:
                break
            gens.append(tuple(data[key]))
        extra = set(data) - {"points", "weights", "name"} - {chr(ord("a") + j) for j in range(len(gens))}
        if extra:
            raise InputError(f"unexpected keys in action file: {sorted(extra)}")
        return cls(weights, tuple(gens), name=data.get("name", name))

    @classmethod
    def load(cls, path: str | Path) -> FiniteAction:
        path = Path(path)
        return cls.from_json(path.read_text(), name=path.stem)

    def to_json(self) -> dict:
        out: dict = {"points": self.size, "weights": [format_fraction(w) for w in self.weights]}
        for i, p in enumerate(self.generators, 1):
            out[chr(ord("a") + i - 1)] = list(p)
        return out


def bundled_actions() -> list[FiniteAction]:
    """The small corpus of actions shipped with the package, sorted by name."""
    from importlib import resources

    root = resources.files("freegroup_ergodic") / "data"
    out = []
    for entry in sorted(root.iterdir(), key=lambda e: e.name):
        if entry.name.endswith(".json"):
            out.append(FiniteAction.from_json(entry.read_text(), name=entry.name[:-5]))
    return out


# ---------------------------------------------------------------------------
# observables and norms

def indicator(act: FiniteAction, point: int, scale=1) -> Observable:
    return tuple(Fraction(scale) if x == point else Fraction(0) for x in range(act.size))


def integral(f: Observable, act: FiniteAction):
    return sum((w * v for w, v in zip(act.weights, f)), Fraction(0))


def l1_norm(f: Observable, act: FiniteAction):
    return sum((w * abs(v) for w, v in zip(act.weights, f)), Fraction(0))


def lp_power(f: Observable, act: FiniteAction, p: int):
    return sum((w * abs(v) ** p for w, v in zip(act.weights, f)), Fraction(0))


def lp_norm(f: Observable, act: FiniteAction, p: int) -> float:
    return float(lp_power(f, act, p)) ** (1.0 / p)


def llogl_norm(f: Observable, act: FiniteAction) -> float:
    """sum mu(x) |f(x)| log+ |f(x)|."""
    return sum(float(w) * abs(float(v)) * math.log(abs(v)) for w, v in zip(act.weights, f) if abs(v) > 1)


def centered(f: Observable, act: FiniteAction) -> Observable:
    m = integral(f, act)
    return tuple(v - m for v in f)


def parse_observable(spec: Mapping, act: FiniteAction) -> Observable:
    """Observable from a config block.

    ``{"values": ["p/q", ...]}`` gives the vector directly;
    ``{"indicator": x, "scale": "p/q", "normalize": bool, "center": bool}``
    builds ``scale * 1_{x}`` (or ``1_{x}/mu(x)`` when normalized), optionally
    minus its mean.
    """
    if "values" in spec:
        f = tuple(parse_fraction(v) for v in spec["values"])
        if len(f) != act.size:
            raise InputError("observable length differs from the number of points")
    elif "indicator" in spec:
        x = spec["indicator"]
        if not isinstance(x, int) or not 0 <= x < act.size:
            raise InputError(f"indicator point {x!r} outside the action")
        scale = parse_fraction(spec.get("scale", "1"))
        if spec.get("normalize"):
            scale = scale / act.weights[x]
        f = indicator(act, x, scale)
    else:
        raise InputError("observable needs 'values' or 'indicator'")
    if spec.get("center"):
        f = centered(f, act)
    return f


# ---------------------------------------------------------------------------
# operators

def apply_measure_operator(zeta: GroupMeasure, f: Observable, act: FiniteAction) -> Observable:
    """(pi(zeta) f)(x) = sum_gamma zeta(gamma) f(gamma^-1 x).

    Weights are first pooled by the permutation gamma^-1 induces, so the
    cost in field operations is (#distinct permutations) x |X|.
    """
    memo: dict[Word, tuple[int, ...]] = {(): tuple(range(act.size))}

    def perm(w: Word) -> tuple[int, ...]:
        p = memo.get(w)
        if p is None:
            head = perm(w[:-1])
            q = act.letter_perm(w[-1])
            p = tuple(head[q[x]] for x in range(act.size))
            memo[w] = p
        return p

    pooled: dict[tuple[int, ...], Fraction] = defaultdict(Fraction)
    for g, p in zeta.items():
        pooled[perm(inverse(g))] += p
    out = [Fraction(0)] * act.size
    for q, p in pooled.items():
        for x in range(act.size):
            out[x] += p * f[q[x]]
    return tuple(out)


def _sum_over_letters(g: Observable, act: FiniteAction) -> list:
    """(P_1 g)(x) = sum_{s in S} g(s^-1 x)."""
    out = [0] * act.size
    for s in alphabet(act.rank):
        q = act.letter_perm(-s)
        for x in range(act.size):
            out[x] += g[q[x]]
    return out


def sphere_sums(nmax: int, f: Observable, act: FiniteAction) -> list[Observable]:
    """P_n f = sum_{|g|=n} f(g^-1 .) for n = 0..nmax, without enumerating spheres.

    Uses P_1 P_1 = P_2 + 2r and P_1 P_n = P_{n+1} + (2r-1) P_{n-1} for n >= 2.
    """
    r = act.rank
    sums: list[Observable] = [tuple(f)]
    if nmax >= 1:
        sums.append(tuple(_sum_over_letters(f, act)))
    for n in range(1, nmax):
        c = 2 * r if n == 1 else 2 * r - 1
        lifted = _sum_over_letters(sums[n], act)
        sums.append(tuple(lifted[x] - c * sums[n - 1][x] for x in range(act.size)))
    return sums


def sphere_averages(nmax: int, f: Observable, act: FiniteAction) -> list[Observable]:
    """pi(sigma_n) f for n = 0..nmax."""
    r = act.rank
    out = []
    for n, s in enumerate(sphere_sums(nmax, f, act)):
        size = 1 if n == 0 else 2 * r * (2 * r - 1) ** (n - 1)
        out.append(tuple(Fraction(v) / size for v in s))
    return out


# ---------------------------------------------------------------------------
# conditional expectations

def _orbits(perms: Iterable[tuple[int, ...]], n: int) -> list[int]:
    parent = list(range(n))

    def find(x: int) -> int:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for p in perms:
        for x in range(n):
            a, b = find(x), find(p[x])
            if a != b:
                parent[max(a, b)] = min(a, b)
    return [find(x) for x in range(n)]


def invariant_partition(act: FiniteAction, subgroup: str) -> list[int]:
    """Orbit label of each point under F (``"F"``) or the even subgroup (``"F2"``)."""
    letters = alphabet(act.rank)
    if subgroup == "F":
        perms = [act.letter_perm(s) for s in letters]
    elif subgroup in ("F2", "F^2"):
        perms = [act.word_perm((s, t)) for s in letters for t in letters if s != -t]
    else:
        raise InputError(f"subgroup must be 'F' or 'F2', got {subgroup!r}")
    return _orbits(perms, act.size)


def conditional_expectation(f: Observable, act: FiniteAction, subgroup: str) -> Observable:
    labels = invariant_partition(act, subgroup)
    num: dict[int, Fraction] = defaultdict(Fraction)
    den: dict[int, Fraction] = defaultdict(Fraction)
    for x, lab in enumerate(labels):
        num[lab] += act.weights[x] * f[x]
        den[lab] += act.weights[x]
    return tuple(num[lab] / den[lab] for lab in labels)


# ---------------------------------------------------------------------------
# push-forward of leafwise weights

@dataclass(frozen=True)
class Density:
    """Cell-constant probability density: value by the first ``depth`` symbols of a cell."""

    depth: int
    values: Mapping[tuple, Fraction]

    def __call__(self, cell) -> Fraction:
        symbols = cell.symbols if hasattr(cell, "symbols") else cell
        return self.values.get(tuple(symbols[: self.depth]), Fraction(0))


def _cell_symbols(cell) -> tuple:
    return tuple(cell.symbols) if hasattr(cell, "symbols") else tuple(cell)


@dataclass(frozen=True)
class PushforwardSpec:
    instance: object
    N: int
    psi: Density | None = None
    K: int = 1  # order of the cyclic group acting on the fiber Z/K; 1 = trivial

    def __post_init__(self):
        if self.N < 1:
            raise InputError("truncation N must be >= 1")
        if self.K < 1:
            raise InputError("K must be a positive cyclic order")
        if self.psi is not None:
            total = Fraction(0)
            for cell, mass in self.instance.cells(self.psi.depth):
                v = self.psi(cell)
                if v < 0:
                    raise InputError("density must be nonnegative")
                total += mass * v
            if total != 1:
                raise InputError(f"density integrates to {total}, not 1")

    def indices(self) -> range:
        return range(1, self.N + 1)

    def fiber_weights(self) -> list[Fraction]:
        """theta restricted to {0..K-1} and normalized; lambda = 1/(2r-1)."""
        base = 2 * self.instance.r - 1
        raw = [Fraction(base) ** t for t in range(self.K)]
        total = sum(raw)
        return [w / total for w in raw]

    def fiber_rn_bound(self) -> Fraction:
        """Uniform bound on d(theta o k)/d theta over k in Z/K."""
        w = self.fiber_weights()
        return max(w) / min(w)


def pushforward_measure(spec: PushforwardSpec, i: int) -> GroupMeasure:
    """zeta_i as an exact rational measure."""
    inst = spec.instance
    depth = inst.depth(i)
    if spec.psi is not None:
        depth = max(depth, spec.psi.depth)
    # k.(b, t) = (b, t + k): every leaf move here is RN-trivial, so the leaf of
    # (b, t + k) has the same neighbors and cocycle values for all t and k, and
    # the fiber integral sum_t theta(t) (1/K) sum_k contributes a factor
    fiber = sum(spec.fiber_weights(), Fraction(0)) * sum((Fraction(1, spec.K) for _ in range(spec.K)), Fraction(0))
    # contributions pooled as integer counts per exact coefficient
    counts: dict[Fraction, Counter] = defaultdict(Counter)
    for cell, mass in inst.cells(depth):
        density = spec.psi(cell) if spec.psi is not None else Fraction(1)
        if not density:
            continue
        coef = mass * density * fiber
        last_weight, bucket = None, None
        for nb in inst.neighborhood(i, cell).neighbors:
            if nb.weight is not last_weight:
                last_weight, bucket = nb.weight, counts[coef * nb.weight]
            bucket[nb.cocycle] += 1
    acc: dict[Word, Fraction] = defaultdict(Fraction)
    for value, by_word in counts.items():
        for g, k in by_word.items():
            acc[g] += value * k
    return GroupMeasure(acc)


def pushforward_family(spec: PushforwardSpec) -> list[GroupMeasure]:
    return [pushforward_measure(spec, i) for i in spec.indices()]


def leafwise_average(
    instance,
    i: int,
    F: Callable[[Hashable, int], Fraction],
    act: FiniteAction,
    depth: int | None = None,
) -> dict[tuple[Hashable, int], Fraction]:
    """A[F | omega_i](b, x) = sum_c omega_i(c, b) F(c, alpha(c, b)^-1 x) on every (cell, x).

    F receives the neighbor cell (a cylinder or a shifted window) and a point
    of X; it must be constant on cells at the chosen depth.
    """
    need = instance.depth(i)
    depth = need if depth is None else depth
    if depth < need:
        raise PreconditionError(f"depth {depth} below the resolution {need} required at index {i}")
    out: dict[tuple[Hashable, int], Fraction] = {}
    for cell, _ in instance.cells(depth):
        hood = instance.neighborhood(i, cell)
        moves = [(nb, act.word_perm(inverse(nb.cocycle))) for nb in hood.neighbors]
        for x in range(act.size):
            out[(cell, x)] = sum((nb.weight * F(nb.point, p[x]) for nb, p in moves), Fraction(0))
    return out


def integrate_leafwise(spec: PushforwardSpec, i: int, f: Observable, act: FiniteAction) -> Observable:
    """x -> int A[f | omega_i](b, x) psi(b) dnu(b), the cell-sum side of the interchange identity."""
    inst = spec.instance
    depth = inst.depth(i) if spec.psi is None else max(inst.depth(i), spec.psi.depth)
    masses = dict(inst.cells(depth))
    avg = leafwise_average(inst, i, lambda c, x: f[x], act, depth)
    out = [Fraction(0)] * act.size
    for (cell, x), v in avg.items():
        density = spec.psi(cell) if spec.psi is not None else 1
        out[x] += masses[cell] * density * v
    return tuple(out)


# ---------------------------------------------------------------------------
# maximal functions

@dataclass(frozen=True)
class MaximalReport:
    weak_11: Fraction  # sup_t t mu{M >= t} / ||f||_1
    strong_ratio: dict[int, float]  # ||M||_p / ||f||_p
    strong_power_ratio: dict[int, Fraction]  # ||M||_p^p / ||f||_p^p, exact
    l1: Fraction
    llogl: float

    def to_json(self, exact: bool = False) -> dict:
        def num(q):
            return format_fraction(q) if exact else float(q)

        return {
            "weak_11": num(self.weak_11),
            "strong": {str(p): v for p, v in self.strong_ratio.items()},
            "strong_power": {str(p): num(v) for p, v in self.strong_power_ratio.items()},
            "l1_norm": num(self.l1),
            "llogl_norm": self.llogl,
        }


def weak_11_ratio(M: Observable, f: Observable, act: FiniteAction) -> Fraction:
    """sup_{t>0} t mu{M >= t} / ||f||_1; the sup is attained at a value of M."""
    norm = l1_norm(f, act)
    if norm == 0:
        raise InputError("weak (1,1) ratio undefined for f = 0")
    best = Fraction(0)
    for t in sorted(set(M)):
        if t <= 0:
            continue
        level = sum((w for w, m in zip(act.weights, M) if m >= t), Fraction(0))
        best = max(best, t * level)
    return best / norm


def maximal_function(
    family: Sequence[GroupMeasure], f: Observable, act: FiniteAction, powers: Sequence[int] = (2, 4)
) -> tuple[Observable, MaximalReport]:
    if not family:
        raise InputError("maximal function needs a nonempty family")
    absf = tuple(abs(v) for v in f)
    M = [Fraction(0)] * act.size
    for zeta in family:
        avg = apply_measure_operator(zeta, absf, act)
        M = [max(a, b) for a, b in zip(M, avg)]
    M = tuple(M)
    exact = {p: lp_power(M, act, p) / lp_power(f, act, p) for p in powers}
    report = MaximalReport(
        weak_11=weak_11_ratio(M, f, act),
        strong_ratio={p: float(q) ** (1.0 / p) for p, q in exact.items()},
        strong_power_ratio=exact,
        l1=l1_norm(f, act),
        llogl=llogl_norm(f, act),
    )
    return M, report


# ---------------------------------------------------------------------------
# ergodicity probe

def skew_ergodicity_check(act: FiniteAction, depth: int) -> bool:
    """Connectivity of the skew-product graph of the tail relation at finite resolution.

    Nodes are (depth-d cylinder, x).  A cylinder-measurable invariant set is a
    union of whole nodes, so a tail move found on any refinement of a node
    links the whole node: for each order n <= d+1 the move is applied on the
    depth-max(d, n+1) refinements, paired with its action on X, and both ends
    are projected back to depth d.  Orders up to d only permute the visible
    letters and preserve x - (abelianized prefix); order d+1 is what reaches
    past the resolution.  A disconnected graph exhibits an invariant set of
    nodes; a connected one is consistent with ergodicity but does not prove it.
    """
    if depth < 3:
        raise PreconditionError("skew ergodicity probe needs depth >= 3")
    r = act.rank
    cells = cylinders(depth, r)
    index = {c: j for j, c in enumerate(cells)}
    n_points = act.size
    parent = list(range(len(cells) * n_points))

    def find(a: int) -> int:
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    def union(a: int, b: int) -> None:
        a, b = find(a), find(b)
        if a != b:
            parent[max(a, b)] = min(a, b)

    perms: dict[Word, tuple[int, ...]] = {}
    for n in range(1, depth + 2):
        for fine in cylinders(max(depth, n + 1), r):
            src = index[fine[:depth]]
            for g, image in tail_moves(n, fine, r):
                dst = index[image[:depth]]
                p = perms.get(g) or perms.setdefault(g, act.word_perm(g))
                for x in range(n_points):
                    union(src * n_points + x, dst * n_points + p[x])
    root = find(0)
    return all(find(a) == root for a in range(len(parent)))


# ---------------------------------------------------------------------------
# convergence

@dataclass(frozen=True)
class ConvergenceRow:
    index: int
    sup_error: Fraction
    l1_error: Fraction


def error_row(index: int, avg: Observable, limit: Observable, act: FiniteAction) -> ConvergenceRow:
    diff = [abs(a - b) for a, b in zip(avg, limit)]
    return ConvergenceRow(index, max(diff), sum((w * d for w, d in zip(act.weights, diff)), Fraction(0)))


def convergence_table(
    averages: Iterable[tuple[int, Observable]], f: Observable, act: FiniteAction, target: str
) -> list[ConvergenceRow]:
    limit = conditional_expectation(f, act, target)
    return [error_row(i, avg, limit, act) for i, avg in averages]


def convergence_experiment(
    spec: PushforwardSpec, act: FiniteAction, f: Observable, target: str
) -> list[ConvergenceRow]:
    """Rows (i, sup|pi(zeta_i) f - E[f|target]|, L1 error) for i = 1..N; asserts nothing."""
    averages = ((i, apply_measure_operator(pushforward_measure(spec, i), f, act)) for i in spec.indices())
    return convergence_table(averages, f, act, target)


def closed_form_averages(instance_name: str, N: int, f: Observable, act: FiniteAction, kappa: GroupMeasure | None = None):
    """pi(zeta_n) f for n = 1..N through the closed-form identities, at operator level.

    TAIL: pi(sigma_{2n}); DOUBLE_BOUNDARY_SHIFT: Cesaro mean of pi(sigma_i), i <= n;
    RANDOM_WALK: Cesaro mean of pi(kappa)^k, k <= n.  Sphere averages come from
    the sphere recursion, so no sphere is enumerated.
    """
    name = instance_name.upper()
    if name == "TAIL":
        spheres = sphere_averages(2 * N, f, act)
        return [(n, spheres[2 * n]) for n in range(1, N + 1)]
    if name == "DOUBLE_BOUNDARY_SHIFT":
        spheres = sphere_averages(N, f, act)
        out, running = [], [Fraction(0)] * act.size
        for n in range(N + 1):
            running = [a + b for a, b in zip(running, spheres[n])]
            if n >= 1:
                out.append((n, tuple(v / (n + 1) for v in running)))
        return out
    if name == "RANDOM_WALK":
        if kappa is None:
            raise InputError("RANDOM_WALK needs kappa")
        out, running, power = [], [Fraction(0)] * act.size, tuple(f)
        for n in range(1, N + 1):
            power = apply_measure_operator(kappa, power, act)
            running = [a + b for a, b in zip(running, power)]
            out.append((n, tuple(v / n for v in running)))
        return out
    raise InputError(f"unknown instance {instance_name!r}")

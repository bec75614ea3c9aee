import itertools
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from freegroup_ergodic.errors import InputError, PreconditionError
from freegroup_ergodic.ergodic import (
    Density,
    FiniteAction,
    PushforwardSpec,
    apply_measure_operator,
    bundled_actions,
    centered,
    closed_form_averages,
    conditional_expectation,
    convergence_experiment,
    indicator,
    integrate_leafwise,
    invariant_partition,
    l1_norm,
    leafwise_average,
    maximal_function,
    parse_observable,
    pushforward_family,
    pushforward_measure,
    skew_ergodicity_check,
    sphere_averages,
    weak_11_ratio,
)
from freegroup_ergodic.free_group import IDENTITY, ball, inverse, parse_word, sphere
from freegroup_ergodic.maharam import DoubleBoundaryShift, RandomWalkRelation, TailRelation, make_instance
from freegroup_ergodic.measures import (
    GroupMeasure,
    cesaro_convolutions,
    cesaro_spheres,
    convolve,
    dirac,
    sphere_uniform,
    uniform_generators,
)

w = parse_word
F = Fraction

Z5 = FiniteAction.cyclic(5, [1, 2])
Z4 = FiniteAction.cyclic(4, [1, 1])
Z101 = FiniteAction.cyclic(101, [1, 2])
CORPUS = bundled_actions()


def brute_operator(zeta, f, act):
    """pi(zeta) f by walking every word letter by letter."""
    out = []
    for x in range(act.size):
        total = F(0)
        for g, p in zeta.items():
            y = x
            for s in reversed(inverse(g)):
                y = act.letter_perm(s)[y]
            total += p * f[y]
        out.append(total)
    return tuple(out)


# ---------------------------------------------------------------------------
# actions


def test_bundled_corpus():
    assert [a.name for a in CORPUS] == ["cyclic101", "parity4", "two_orbits8"]
    assert [a.size for a in CORPUS] == [101, 4, 8]
    for act in CORPUS:
        assert FiniteAction.from_json(act.to_json()) == act


def test_action_validation():
    with pytest.raises(InputError):
        FiniteAction((F(1, 2), F(1, 2)), ((0, 0), (0, 1)))
    with pytest.raises(InputError):
        FiniteAction((F(1, 3), F(2, 3)), ((1, 0), (0, 1)))
    with pytest.raises(InputError):
        FiniteAction((F(1, 2), F(1, 3)), ((0, 1), (0, 1)))
    with pytest.raises(InputError):
        FiniteAction.from_json({"points": 2, "a": [1, 0]})


def test_word_perm_is_left_action():
    for g, h in itertools.product(ball(2, 2), repeat=2):
        gh = g + h if not g or not h or g[-1] != -h[0] else None
        if gh is None:
            continue
        for x in range(5):
            assert Z5.act(gh, x) == Z5.act(g, Z5.act(h, x))


# ---------------------------------------------------------------------------
# operators


def test_operator_examples():
    f = indicator(Z5, 0)
    assert apply_measure_operator(dirac(), f, Z5) == f
    assert apply_measure_operator(sphere_uniform(1, 2), f, Z5)[1] == F(1, 4)
    const = (F(7, 3),) * 5
    assert apply_measure_operator(cesaro_spheres(2, 2), const, Z5) == const


actions = st.integers(min_value=1, max_value=6).flatmap(
    lambda n: st.tuples(st.permutations(range(n)), st.permutations(range(n))).map(
        lambda ps: FiniteAction((F(1, n),) * n, ps)
    )
)
measures = st.dictionaries(
    st.sampled_from(list(ball(3, 2))), st.integers(min_value=1, max_value=4), min_size=1, max_size=6
).map(lambda d: GroupMeasure({g: F(v, sum(d.values())) for g, v in d.items()}))
values = st.lists(st.integers(min_value=-5, max_value=5), min_size=6, max_size=6)


@settings(max_examples=60, deadline=None)
@given(actions, measures, values)
def test_operator_positive_unital_contractive(act, zeta, raw):
    f = tuple(F(v) for v in raw[: act.size])
    out = apply_measure_operator(zeta, f, act)
    assert out == brute_operator(zeta, f, act)
    assert apply_measure_operator(zeta, (F(1),) * act.size, act) == (F(1),) * act.size
    assert l1_norm(out, act) <= l1_norm(f, act)
    nonneg = tuple(abs(v) for v in f)
    assert all(v >= 0 for v in apply_measure_operator(zeta, nonneg, act))


@settings(max_examples=40, deadline=None)
@given(actions, measures, measures, values)
def test_convolution_covariance(act, z1, z2, raw):
    f = tuple(F(v) for v in raw[: act.size])
    lhs = apply_measure_operator(convolve(z1, z2), f, act)
    rhs = apply_measure_operator(z1, apply_measure_operator(z2, f, act), act)
    assert lhs == rhs


def test_operator_contraction_on_corpus():
    for act in CORPUS:
        f = centered(indicator(act, 0, 3), act)
        for zeta in (sphere_uniform(2, 2), cesaro_convolutions(uniform_generators(2), 3)):
            assert l1_norm(apply_measure_operator(zeta, f, act), act) <= l1_norm(f, act)


@pytest.mark.parametrize("act", [Z5, Z101, CORPUS[2]], ids=["Z5", "Z101", "two_orbits8"])
def test_sphere_recursion_matches_enumeration(act):
    f = indicator(act, 0)
    fast = sphere_averages(7, f, act)
    for n in range(8):
        assert fast[n] == apply_measure_operator(sphere_uniform(n, 2), f, act)


# ---------------------------------------------------------------------------
# conditional expectations


def test_conditional_expectation_examples():
    f = indicator(Z4, 0)
    half, zero, quarter = F(1, 2), F(0), F(1, 4)
    assert conditional_expectation(f, Z4, "F2") == (half, zero, half, zero)
    assert conditional_expectation(f, Z4, "F") == (quarter,) * 4
    z6 = FiniteAction.cyclic(6, [2, 2])
    third = F(1, 3)
    assert conditional_expectation(indicator(z6, 0), z6, "F") == (third, zero, third, zero, third, zero)
    inv = (F(1), F(5), F(1), F(5))
    assert conditional_expectation(inv, Z4, "F2") == inv


def test_conditional_expectation_idempotent_and_sphere_fixed():
    for act in CORPUS + [Z5, Z4]:
        f = indicator(act, 0, 7)
        for target in ("F", "F2"):
            e = conditional_expectation(f, act, target)
            assert conditional_expectation(e, act, target) == e
        e2 = conditional_expectation(f, act, "F2")
        for n in (1, 2):
            assert apply_measure_operator(sphere_uniform(2 * n, 2), e2, act) == e2


def test_f2_orbits_on_parity_action():
    assert invariant_partition(Z4, "F2") == [0, 1, 0, 1]
    assert len(set(invariant_partition(Z5, "F2"))) == 1


# ---------------------------------------------------------------------------
# push-forward


@pytest.mark.parametrize("r, N", [(2, 3), (3, 2)])
def test_tail_pushforward_is_even_sphere(r, N):
    family = pushforward_family(PushforwardSpec(TailRelation(r), N))
    assert family == [sphere_uniform(2 * n, r) for n in range(1, N + 1)]


def test_random_walk_pushforward_is_cesaro():
    for kappa in (uniform_generators(2), GroupMeasure({w("a"): F(1, 2), w("bb"): F(1, 3), w("B"): F(1, 6)})):
        family = pushforward_family(PushforwardSpec(RandomWalkRelation(kappa, 2), 4))
        assert family == [cesaro_convolutions(kappa, n) for n in range(1, 5)]


def test_double_boundary_pushforward_is_cesaro_of_spheres():
    spec = PushforwardSpec(DoubleBoundaryShift(2), 3)
    assert pushforward_measure(spec, 1) == GroupMeasure({IDENTITY: F(1, 2), **{g: F(1, 8) for g in sphere(1, 2)}})
    assert pushforward_family(spec) == [cesaro_spheres(n, 2) for n in range(1, 4)]


def test_density_must_integrate_to_one():
    with pytest.raises(InputError):
        PushforwardSpec(TailRelation(2), 2, Density(1, {(1,): F(1)}))


HALF_DENSITY = Density(1, {(1,): F(2), (-1,): F(2)})


@pytest.mark.parametrize("psi, K", [(None, 1), (None, 3), (HALF_DENSITY, 1), (HALF_DENSITY, 2)])
@pytest.mark.parametrize("name", ["TAIL", "RANDOM_WALK", "DOUBLE_BOUNDARY_SHIFT"])
def test_interchange_identity(name, psi, K):
    inst = make_instance(name, 2)
    if name == "RANDOM_WALK" and psi is not None:
        # random-walk cells are windows of words, so the density keys are words
        psi = Density(1, {(w("a"),): F(2), (w("A"),): F(2)})
    spec = PushforwardSpec(inst, 2, psi, K)
    for act in (Z5, CORPUS[2]):
        f = centered(indicator(act, 0, 3), act)
        for i in spec.indices():
            zeta = pushforward_measure(spec, i)
            assert zeta.mass() == 1
            assert apply_measure_operator(zeta, f, act) == integrate_leafwise(spec, i, f, act)


def test_cyclic_fiber_leaves_pushforward_unchanged():
    for name in ("TAIL", "DOUBLE_BOUNDARY_SHIFT"):
        inst = make_instance(name, 2)
        plain = pushforward_family(PushforwardSpec(inst, 2))
        for K in (2, 5):
            spec = PushforwardSpec(inst, 2, None, K)
            assert pushforward_family(spec) == plain
            assert sum(spec.fiber_weights()) == 1
            assert spec.fiber_rn_bound() == 3 ** (K - 1)


def test_nontrivial_density_gives_probability_measures():
    family = pushforward_family(PushforwardSpec(TailRelation(2), 3, HALF_DENSITY))
    assert all(z.mass() == 1 for z in family)
    # weighting only the a^{+-1} rays still spreads mass over the even sphere
    assert all(set(z) <= set(sphere(2 * n, 2)) for n, z in enumerate(family, 1))


def test_leafwise_average_examples():
    inst = TailRelation(2)
    f = indicator(Z4, 0)
    avg = leafwise_average(inst, 1, lambda c, x: f[x], Z4)
    for c in sphere(2, 2):
        hood = inst.neighborhood(1, c)
        expected = F(1, 2) * sum(f[Z4.act(inverse(nb.cocycle), 0)] for nb in hood.neighbors)
        assert avg[(c, 0)] == expected
    ones = leafwise_average(inst, 2, lambda c, x: F(1), Z5)
    assert set(ones.values()) == {F(1)}
    point = FiniteAction.cyclic(1, [0, 0])
    g_dep = leafwise_average(inst, 1, lambda c, x: F(c[0]), point)
    for c in sphere(2, 2):
        # order-1 neighbors of [c1 c2] are [t c2] with t not in {c1, c2^-1}
        firsts = [t for t in (1, -1, 2, -2) if t not in (c[0], -c[1])]
        assert g_dep[(c, 0)] == F(sum(firsts), 2)
    with pytest.raises(PreconditionError):
        leafwise_average(inst, 2, lambda c, x: F(1), Z5, depth=2)


# ---------------------------------------------------------------------------
# maximal functions


def test_maximal_examples():
    for act in CORPUS:
        f = indicator(act, 0, 1 / act.weights[0])
        M, rep = maximal_function([dirac()], f, act)
        assert M == tuple(abs(v) for v in f)
        assert rep.weak_11 <= 1 and all(v <= 1 for v in rep.strong_power_ratio.values())
        one = (F(1),) * act.size
        M1, rep1 = maximal_function(pushforward_family(PushforwardSpec(TailRelation(2), 3)), one, act)
        assert M1 == one and rep1.weak_11 == 1
    with pytest.raises(InputError):
        maximal_function([], (F(1),), FiniteAction.cyclic(1, [0, 0]))


def test_weak_ratio_definition():
    act = FiniteAction.cyclic(4, [1, 1])
    f = (F(4), F(0), F(0), F(0))
    M = (F(2), F(1), F(1), F(0))
    # t=1: 1 * 3/4 ; t=2: 2 * 1/4
    assert weak_11_ratio(M, f, act) == F(3, 4)


def test_maximal_tail_z101_finite():
    family = pushforward_family(PushforwardSpec(TailRelation(2), 3))
    f = indicator(Z101, 0, 101)
    M, rep = maximal_function(family, f, Z101)
    assert 0 < rep.weak_11 < 10 and rep.strong_ratio[2] < 10
    assert max(M) <= 101


# ---------------------------------------------------------------------------
# ergodicity probe


def test_skew_ergodicity_examples():
    point = FiniteAction.cyclic(1, [0, 0])
    assert skew_ergodicity_check(point, 3)
    assert skew_ergodicity_check(Z5, 3)
    assert not skew_ergodicity_check(FiniteAction.cyclic(2, [1, 1]), 3)
    assert not skew_ergodicity_check(Z4, 3)
    with pytest.raises(PreconditionError):
        skew_ergodicity_check(Z5, 2)


def test_skew_probe_agrees_with_f2_transitivity():
    # the tail cocycle takes values in F2, so an F2-invariant split of X disconnects the graph
    for steps in ([1, 2], [1, 1], [2, 2], [1, 3], [0, 1]):
        for n in (3, 6):
            act = FiniteAction.cyclic(n, steps)
            transitive = len(set(invariant_partition(act, "F2"))) == 1
            assert skew_ergodicity_check(act, 3) == transitive


# ---------------------------------------------------------------------------
# convergence


def test_convergence_invariant_observable_has_zero_error():
    f = conditional_expectation(indicator(Z4, 0), Z4, "F2")
    rows = convergence_experiment(PushforwardSpec(TailRelation(2), 3), Z4, f, "F2")
    assert [(r.sup_error, r.l1_error) for r in rows] == [(0, 0)] * 3


def test_convergence_parity_obstruction():
    f = indicator(Z4, 0)
    rows = convergence_experiment(PushforwardSpec(TailRelation(2), 3), Z4, f, "F")
    assert all(r.sup_error > F(1, 4) for r in rows)


def test_closed_form_route_matches_pushforward_route():
    f = centered(indicator(Z101, 0), Z101)
    kappa = uniform_generators(2)
    for name in ("TAIL", "DOUBLE_BOUNDARY_SHIFT", "RANDOM_WALK"):
        spec = PushforwardSpec(make_instance(name, 2, kappa), 3)
        via_push = [(i, apply_measure_operator(pushforward_measure(spec, i), f, Z101)) for i in spec.indices()]
        assert closed_form_averages(name, 3, f, Z101, kappa) == via_push


def test_parse_observable():
    assert parse_observable({"indicator": 1, "scale": "2"}, Z4) == (0, 2, 0, 0)
    assert parse_observable({"indicator": 0, "normalize": True}, Z4) == (4, 0, 0, 0)
    assert parse_observable({"values": ["1", "1/2", "0", "0"], "center": True}, Z4) == (
        F(5, 8), F(1, 8), F(-3, 8), F(-3, 8)
    )
    with pytest.raises(InputError):
        parse_observable({"indicator": 9}, Z4)

"""Batch runners behind the CLI subcommands.

Each runner takes a parsed JSON config (plus the directory it came from, for
resolving relative action paths) and returns plain data; the CLI does the
formatting and exit codes.
"""

from __future__ import annotations

from fractions import Fraction
from pathlib import Path
from typing import Mapping

from .boundary import Cylinder, ratio_set_witness
from .ergodic import (
    Density,
    FiniteAction,
    PushforwardSpec,
    apply_measure_operator,
    bundled_actions,
    closed_form_averages,
    convergence_experiment,
    convergence_table,
    maximal_function,
    parse_observable,
    pushforward_family,
    pushforward_measure,
)
from .errors import InputError
from .free_group import format_word, parse_word, word_key
from .maharam import INSTANCE_NAMES, invariance_sweep, make_instance
from .measures import (
    GroupMeasure,
    cesaro_convolutions,
    cesaro_spheres,
    dirac,
    format_fraction,
    parse_fraction,
    sphere_uniform,
    uniform_generators,
)


def _rank(config: Mapping, default: int | None = None) -> int:
    r = config.get("r", default)
    if not isinstance(r, int) or r < 2:
        raise InputError(f"config 'r' must be an integer >= 2, got {r!r}")
    return r


def _truncation(config: Mapping) -> int:
    N = config.get("N")
    if not isinstance(N, int) or N < 1:
        raise InputError(f"config 'N' must be an integer >= 1, got {N!r}")
    return N


def _kappa(config: Mapping, r: int) -> GroupMeasure:
    if "kappa" in config and config["kappa"] is not None:
        return GroupMeasure.from_json(config["kappa"], r)
    return uniform_generators(r)


def load_action(ref: str, base: Path) -> FiniteAction:
    if ref.startswith("bundled:"):
        name = ref.split(":", 1)[1]
        for act in bundled_actions():
            if act.name == name:
                return act
        raise InputError(f"no bundled action named {name!r}")
    path = Path(ref)
    if not path.is_absolute():
        path = base / path
    if not path.exists():
        raise InputError(f"action file not found: {path}")
    return FiniteAction.load(path)


def _density(config: Mapping, r: int) -> Density | None:
    block = config.get("psi")
    if block is None:
        return None
    values = {tuple(parse_word(k, r, reduced=False)): parse_fraction(v) for k, v in block["values"].items()}
    return Density(int(block["depth"]), values)


def build_spec(config: Mapping, r: int) -> PushforwardSpec:
    instance = make_instance(config.get("instance", "TAIL"), r, _kappa(config, r))
    return PushforwardSpec(instance, _truncation(config), _density(config, r), int(config.get("K", 1)))


# ---------------------------------------------------------------------------
# identity

def closed_form_measure(name: str, n: int, r: int, kappa: GroupMeasure) -> GroupMeasure:
    if name == "TAIL":
        return sphere_uniform(2 * n, r)
    if name == "RANDOM_WALK":
        return cesaro_convolutions(kappa, n)
    if name == "DOUBLE_BOUNDARY_SHIFT":
        return cesaro_spheres(n, r)
    raise InputError(f"unknown instance {name!r}")


def first_difference(lhs: GroupMeasure, rhs: GroupMeasure):
    for g in sorted(set(lhs) | set(rhs), key=word_key):
        if lhs[g] != rhs[g]:
            return g, lhs[g], rhs[g]
    return None


def run_identity(config: Mapping) -> dict:
    r = _rank(config, 2)
    N = _truncation(config)
    kappa = _kappa(config, r)
    names = [n.upper() for n in config.get("instances", INSTANCE_NAMES)]
    comparisons = []
    failure = None
    for name in names:
        instance = make_instance(name, r, kappa)
        spec = PushforwardSpec(instance, N)
        for n in spec.indices():
            lhs = pushforward_measure(spec, n)
            rhs = closed_form_measure(name, n, r, kappa)
            diff = first_difference(lhs, rhs)
            comparisons.append(
                {"instance": name, "n": n, "equal": diff is None, "support": len(lhs), "pushforward": lhs.to_json()}
            )
            if diff is not None and failure is None:
                g, a, b = diff
                failure = {
                    "instance": name,
                    "n": n,
                    "gamma": format_word(g),
                    "lhs": format_fraction(a),
                    "rhs": format_fraction(b),
                }
    return {"r": r, "N": N, "pass": failure is None, "failure": failure, "comparisons": comparisons}


# ---------------------------------------------------------------------------
# converge

def run_converge(config: Mapping, base: Path) -> list:
    if "action" not in config:
        raise InputError("converge needs an 'action'")
    act = load_action(config["action"], base)
    r = _rank(config, act.rank)
    if r != act.rank:
        raise InputError(f"config r={r} but the action has {act.rank} generators")
    f = parse_observable(config.get("observable", {"indicator": 0, "center": True}), act)
    target = config.get("target", "F")
    method = config.get("method", "pushforward")
    if method == "pushforward":
        return convergence_experiment(build_spec(config, r), act, f, target)
    if method == "closed_form":
        name = config.get("instance", "TAIL").upper()
        averages = closed_form_averages(name, _truncation(config), f, act, _kappa(config, r))
        return convergence_table(averages, f, act, target)
    raise InputError(f"unknown method {method!r}")


# ---------------------------------------------------------------------------
# maximal

def run_maximal(config: Mapping, base: Path, exact: bool = False) -> dict:
    refs = config.get("actions", ["bundled"])
    actions: list[FiniteAction] = []
    for ref in refs:
        if ref == "bundled":
            actions.extend(bundled_actions())
        else:
            actions.append(load_action(ref, base))
    obs = config.get("observable", {"indicator": 0, "normalize": True})
    out = []
    for act in actions:
        spec = build_spec({**config, "N": config.get("N", 4)}, act.rank)
        family = pushforward_family(spec)
        f = parse_observable(obs, act)
        _, report = maximal_function(family, f, act)
        entry = {"action": act.name, "points": act.size, "family": report.to_json(exact)}
        if config.get("control", True):
            _, ctrl = maximal_function([dirac()], f, act)
            entry["control_delta_e"] = ctrl.to_json(exact)
        out.append(entry)
    worst = max(Fraction(e["family"]["weak_11"]) if exact else e["family"]["weak_11"] for e in out)
    return {
        "instance": config.get("instance", "TAIL"),
        "N": config.get("N", 4),
        "actions": out,
        "max_weak_11": format_fraction(worst) if exact else worst,
        "max_strong_2": max(e["family"]["strong"]["2"] for e in out),
    }


# ---------------------------------------------------------------------------
# witness

def run_witness(config: Mapping) -> dict:
    r = _rank(config, 2)
    A: Cylinder = parse_word(config.get("cylinder", "a"), r, reduced=False)
    targets = [parse_fraction(t) for t in config.get("targets", ["1"])]
    max_length = int(config.get("max_length", 6))
    max_depth = int(config.get("max_depth", 6))
    rows = []
    for t in targets:
        w = ratio_set_witness(A, t, r, max_length, max_depth)
        row = {"target": format_fraction(t), "found": w is not None}
        if w is not None:
            row.update(subset=format_word(w.subset), g=format_word(w.g), image=format_word(w.image))
        rows.append(row)
    return {"r": r, "cylinder": format_word(A), "max_length": max_length, "max_depth": max_depth, "witnesses": rows}


# ---------------------------------------------------------------------------
# invariance

def run_invariance(config: Mapping) -> dict:
    r = _rank(config, 2)
    max_length = int(config.get("max_length", 3))
    depth = int(config.get("depth", 5))
    lo, hi = config.get("fibers", [-2, 2])
    reports = invariance_sweep(r, max_length, depth, range(lo, hi + 1))
    return {"r": r, "max_length": max_length, "depth": depth, "fibers": [lo, hi], "checked": len(reports), "pass": True}


def control_family_check(act: FiniteAction, f) -> bool:
    """pi(delta_e) is the identity."""
    return apply_measure_operator(dirac(), f, act) == tuple(f)

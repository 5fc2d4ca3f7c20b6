import pytest

from twtlshield.twtl import parse_formula
from twtlshield.automaton import compile_formula
from twtlshield.mdp import LabeledIntervalMdp
from twtlshield.product import build_product

B = frozenset({"B"})
C = frozenset({"C"})
BC = frozenset({"B", "C"})
E = frozenset()


@pytest.fixture(scope="session")
def window_formula():
    """Stay at B for one step within [0, 2] (the six-state reference automaton)."""
    return parse_formula("[H^1 B]^[0,2]", {"B"})


@pytest.fixture(scope="session")
def window_automaton(window_formula):
    return compile_formula(window_formula, {"B"})


def three_state_mdp(exact=True, slack=0.1):
    """Three states s0/s1/s2 with labels {}, {B}, {C} and two actions.

    The transition numbers are fixture constants.  With ``exact`` the bounds
    pin the true dynamics; otherwise they widen by ``slack`` on each side.
    """
    dynamics = {
        ("s0", "a1", "s1"): 0.8, ("s0", "a1", "s2"): 0.2,
        ("s0", "a2", "s0"): 0.5, ("s0", "a2", "s2"): 0.5,
        ("s1", "a1", "s1"): 1.0,
        ("s1", "a2", "s0"): 0.6, ("s1", "a2", "s2"): 0.4,
        ("s2", "a1", "s2"): 1.0,
        ("s2", "a2", "s0"): 1.0,
    }
    if exact:
        bounds = {key: (p, p) for key, p in dynamics.items()}
    else:
        bounds = {key: (max(0.0, p - slack), min(1.0, p + slack)) for key, p in dynamics.items()}
    labels = {"s0": E, "s1": B, "s2": C}
    return LabeledIntervalMdp(["s0", "s1", "s2"], ["a1", "a2"], labels, bounds, dynamics)


@pytest.fixture()
def labeled_mdp():
    return three_state_mdp()


def worst_case_toy():
    """Product whose root has two actions with successor bounds (1,0) / (0.5,0.5).

    States: r (start), g (labeled G, success), l (dead end), m1/m2 (coin-flip
    cells).  Constraint: observe G within two steps.  Hand computation gives
    f(root) = max(0.9*1 + 0.1*0, 0.5) = 0.9 with the first action optimal.
    """
    states = ["r", "g", "l", "m1", "m2"]
    actions = ["a", "b"]
    labels = {"r": E, "g": frozenset({"G"}), "l": E, "m1": E, "m2": E}
    bounds = {
        ("r", "a", "g"): (0.9, 1.0), ("r", "a", "l"): (0.0, 0.1),
        ("r", "b", "m1"): (0.9, 1.0), ("r", "b", "m2"): (0.0, 0.1),
        ("g", "a", "g"): (1.0, 1.0),
        ("l", "a", "l"): (1.0, 1.0),
        ("m1", "a", "g"): (0.5, 0.5), ("m1", "a", "l"): (0.5, 0.5),
        ("m2", "a", "g"): (0.5, 0.5), ("m2", "a", "l"): (0.5, 0.5),
    }
    dynamics = {
        ("r", "a", "g"): 0.95, ("r", "a", "l"): 0.05,
        ("r", "b", "m1"): 0.95, ("r", "b", "m2"): 0.05,
        ("g", "a", "g"): 1.0,
        ("l", "a", "l"): 1.0,
        ("m1", "a", "g"): 0.5, ("m1", "a", "l"): 0.5,
        ("m2", "a", "g"): 0.5, ("m2", "a", "l"): 0.5,
    }
    enabled = {"g": ("a",), "l": ("a",), "m1": ("a",), "m2": ("a",)}
    mdp = LabeledIntervalMdp(states, actions, labels, bounds, dynamics, None, enabled)
    formula = parse_formula("[H^0 G]^[0,2]", {"G"})
    automaton = compile_formula(formula, {"G"})
    return build_product(mdp, automaton, 2)


@pytest.fixture()
def toy_product():
    return worst_case_toy()

import pytest

from twtlshield.automaton import compile_formula
from twtlshield.mdp import LabeledIntervalMdp
from twtlshield.product import ProductError, build_product, project_bounds

B = frozenset({"B"})
E = frozenset()


@pytest.fixture(scope="module")
def bc_automaton(window_formula):
    """The reference automaton over the product alphabet {B, C}."""
    return compile_formula(window_formula, {"B", "C"})


def by_annotation(automaton):
    return {ann: q for q, ann in automaton.annotations.items()}


class TestBuild:
    def test_initial_states_pair_start_labels(self, labeled_mdp, bc_automaton):
        prod = build_product(labeled_mdp, bc_automaton, 2)
        states = by_annotation(bc_automaton)
        q_b = states["H^0 B | [H^1 B]^[0,1]"]     # after observing B at the start
        q_e = states["[H^1 B]^[0,1]"]             # after observing anything else
        assert set(prod.initial) == {("s0", q_e, 0), ("s1", q_b, 0), ("s2", q_e, 0)}

    def test_hand_derived_adjacency(self, labeled_mdp, bc_automaton):
        prod = build_product(labeled_mdp, bc_automaton, 2)
        states = by_annotation(bc_automaton)
        q_b, q_e = states["H^0 B | [H^1 B]^[0,1]"], states["[H^1 B]^[0,1]"]
        q_hold, trash = states["H^0 B"], bc_automaton.trash
        acc = states["TRUE"]

        assert project_bounds(prod, ("s0", q_e, 0), "a1") == (
            (("s1", q_hold, 1), 0.8, 0.8),
            (("s2", trash, 1), 0.2, 0.2),
        )
        assert project_bounds(prod, ("s0", q_e, 0), "a2") == (
            (("s0", trash, 1), 0.5, 0.5),
            (("s2", trash, 1), 0.5, 0.5),
        )
        assert project_bounds(prod, ("s1", q_b, 0), "a1") == ((("s1", acc, 1), 1.0, 1.0),)
        assert project_bounds(prod, ("s1", q_b, 0), "a2") == (
            (("s0", trash, 1), 0.6, 0.6),
            (("s2", trash, 1), 0.4, 0.4),
        )
        assert project_bounds(prod, ("s2", q_e, 0), "a1") == ((("s2", trash, 1), 1.0, 1.0),)

    def test_all_paths_trash_without_label(self, bc_automaton):
        # single state labeled {} looping on itself: B is never observed
        m = LabeledIntervalMdp(["s"], ["a"], {"s": E}, {("s", "a", "s"): (1.0, 1.0)},
                               {("s", "a", "s"): 1.0})
        prod = build_product(m, bc_automaton, 2)
        assert all(q == bc_automaton.trash for s, q in prod.layers[2])

    def test_deterministic_builds(self, labeled_mdp, bc_automaton):
        a = build_product(labeled_mdp, bc_automaton, 2)
        b = build_product(labeled_mdp, bc_automaton, 2)
        assert a.layers == b.layers
        assert a.initial == b.initial
        assert a.n_states() == b.n_states()

    def test_alphabet_mismatch(self, bc_automaton):
        m = LabeledIntervalMdp(["s"], ["a"], {"s": frozenset({"Z"})},
                               {("s", "a", "s"): (1.0, 1.0)})
        with pytest.raises(ProductError):
            build_product(m, bc_automaton, 2)


class TestInvariants:
    def test_time_layering(self, labeled_mdp, bc_automaton):
        prod = build_product(labeled_mdp, bc_automaton, 2)
        for t, layer in enumerate(prod.layers[:-1]):
            for s, q in layer:
                for a in labeled_mdp.enabled[s]:
                    for (s2, q2, t2), lo, hi in prod.successors((s, q, t), a):
                        assert t2 == t + 1
                        assert (s2, q2) in prod.layer_sets[t + 1]

    def test_bound_inheritance(self, labeled_mdp, bc_automaton):
        prod = build_product(labeled_mdp, bc_automaton, 2)
        for t, layer in enumerate(prod.layers[:-1]):
            for s, q in layer:
                for a in labeled_mdp.enabled[s]:
                    mdp_bounds = {s2: (lo, hi) for s2, lo, hi in labeled_mdp.support(s, a)}
                    for (s2, q2, _), lo, hi in prod.successors((s, q, t), a):
                        assert (lo, hi) == mdp_bounds[s2]

    def test_absorption_lift(self, labeled_mdp, bc_automaton):
        prod = build_product(labeled_mdp, bc_automaton, 2)
        accepting = bc_automaton.accepting
        trash = bc_automaton.trash
        for t, layer in enumerate(prod.layers[:-1]):
            for s, q in layer:
                if q not in accepting and q != trash:
                    continue
                for a in labeled_mdp.enabled[s]:
                    for (s2, q2, _), _, _ in prod.successors((s, q, t), a):
                        if q in accepting:
                            assert q2 in accepting
                        else:
                            assert q2 == trash

    def test_terminal_states_classified(self, labeled_mdp, bc_automaton):
        prod = build_product(labeled_mdp, bc_automaton, 2)
        for s, q in prod.layers[2]:
            p = (s, q, 2)
            assert prod.is_accepting(p) or prod.is_trash(p)

    def test_terminal_coercion_reported(self, labeled_mdp, bc_automaton):
        # horizon shorter than the time bound leaves undecided states at the end
        prod = build_product(labeled_mdp, bc_automaton, 1)
        assert prod.coerced
        for s, q in prod.coerced:
            assert prod.is_trash((s, q, 1))
        # at the proper horizon nothing needs coercion
        assert build_product(labeled_mdp, bc_automaton, 2).coerced == frozenset()


class TestSummary:
    def test_summary_counts(self, labeled_mdp, bc_automaton):
        prod = build_product(labeled_mdp, bc_automaton, 2)
        doc = prod.summary()
        assert doc["horizon"] == 2
        assert doc["total_states"] == prod.n_states()
        assert len(doc["layers"]) == 3
        assert doc["layers"][0]["states"] == 3

    def test_case_study_build_determinism(self):
        from twtlshield.gridworld import canonical_case_study, build_grid_mdp, CASE_STUDY_PROPS
        from twtlshield.twtl import time_bound
        spec, formula = canonical_case_study()
        aut = compile_formula(formula, CASE_STUDY_PROPS)
        m = build_grid_mdp(spec)
        T = time_bound(formula)
        assert build_product(m, aut, T).n_states() == build_product(m, aut, T).n_states()

import math
import random

import pytest

from twtlshield.gridworld import (ACTIONS, CASE_STUDY_PROPS, GridError, GridSpec,
                                  build_grid_mdp, canonical_case_study, render_ascii)
from twtlshield.twtl import time_bound


def plain_grid(eps_real=0.03, eps=0.08):
    return GridSpec(width=6, height=6, real_uncertainty=eps_real, assumed_uncertainty=eps)


class TestDynamics:
    def test_interior_cell_split(self):
        m = build_grid_mdp(plain_grid())
        cell = (2, 2)
        row = {s2: p for (s, a, s2), p in m.true_dynamics.items()
               if s == cell and a == "E"}
        assert row[(3, 2)] == pytest.approx(0.97, abs=1e-15)
        others = {s2: p for s2, p in row.items() if s2 != (3, 2)}
        assert len(others) == 8
        for p in others.values():
            assert p == pytest.approx(0.03 / 8, abs=1e-15)

    def test_stay_is_deterministic(self):
        m = build_grid_mdp(plain_grid())
        for cell in m.states:
            assert m.bounds[(cell, "Stay", cell)] == (1.0, 1.0)
            assert m.true_dynamics[(cell, "Stay", cell)] == 1.0
            assert len(m.support(cell, "Stay")) == 1

    def test_corner_cell_mass_conservation(self):
        m = build_grid_mdp(plain_grid())
        corner = (0, 0)
        # at a corner only E, NE, N and Stay are feasible
        assert set(m.enabled[corner]) == {"N", "NE", "E", "Stay"}
        for a in m.enabled[corner]:
            total = math.fsum(p for (s, a2, _), p in m.true_dynamics.items()
                              if s == corner and a2 == a)
            assert abs(total - 1.0) <= 1e-15

    def test_mass_conservation_everywhere(self):
        m = build_grid_mdp(plain_grid())
        for cell in m.states:
            for a in m.enabled[cell]:
                total = math.fsum(p for (s, a2, _), p in m.true_dynamics.items()
                                  if s == cell and a2 == a)
                assert abs(total - 1.0) <= 1e-15

    def test_bounds_shape(self):
        m = build_grid_mdp(plain_grid(0.03, 0.08))
        cell = (3, 3)
        intended = (4, 3)
        assert m.bounds[(cell, "E", intended)] == (1.0 - 0.08, 1.0)
        for s2, lo, hi in m.support(cell, "E"):
            if s2 != intended:
                assert (lo, hi) == (0.0, 0.08)

    @pytest.mark.parametrize("eps", [0.03, 0.08, 0.13])
    def test_true_dynamics_inside_bounds_for_swept_eps(self, eps):
        m = build_grid_mdp(plain_grid(0.03, eps))
        assert m.validate() == []

    def test_conservative_prior_required(self):
        with pytest.raises(GridError):
            plain_grid(eps_real=0.08, eps=0.03)


class TestDoors:
    def test_door_removes_actions(self):
        spec, _ = canonical_case_study()
        m = build_grid_mdp(spec)
        # below the pickup cell only the straight-north move crosses the door
        assert "NE" not in m.enabled[(2, 1)]
        assert "NW" not in m.enabled[(2, 1)]
        assert "N" in m.enabled[(2, 1)]
        # and the pickup cell never exits downward through it
        for a in ("S", "SE", "SW"):
            assert a not in m.enabled[(2, 2)]

    def test_no_unintended_transition_through_door(self):
        spec, _ = canonical_case_study()
        m = build_grid_mdp(spec)
        gate_targets = {s2 for (s, a, s2) in m.true_dynamics
                        if s == (2, 2) and m.true_dynamics[(s, a, s2)] > 0}
        assert not {(2, 1), (1, 1), (3, 1)} & gate_targets

    def test_stay_cannot_be_forbidden(self):
        with pytest.raises(GridError):
            GridSpec(width=3, height=3, real_uncertainty=0.0, assumed_uncertainty=0.1,
                     one_way_doors={(1, 1): frozenset({"Stay"})})


class TestCanonicalCaseStudy:
    def test_formula_time_bound(self):
        _, formula = canonical_case_study()
        assert time_bound(formula) == 35

    def test_labels_one_cell_each(self):
        spec, _ = canonical_case_study()
        seen = {}
        for cell, props in spec.labels.items():
            for prop in props:
                assert prop not in seen
                seen[prop] = cell
        assert set(seen) == set(CASE_STUDY_PROPS)

    def test_rewards_graded(self):
        spec, _ = canonical_case_study()
        values = sorted(spec.reward_cells.values())
        assert values[0] > 0
        assert len(set(values)) > 1

    def test_actions(self):
        assert ACTIONS == ("N", "NE", "E", "SE", "S", "SW", "W", "NW", "Stay")

    def test_uncertainty_override(self):
        spec, _ = canonical_case_study(0.03, 0.13)
        assert spec.assumed_uncertainty == 0.13
        assert spec.real_uncertainty == 0.03


class TestSerialization:
    def test_json_round_trip(self):
        spec, _ = canonical_case_study()
        loaded = GridSpec.from_json(spec.to_json())
        assert loaded.labels == spec.labels
        assert loaded.reward_cells == spec.reward_cells
        assert loaded.one_way_doors == spec.one_way_doors
        assert loaded.start_cell == spec.start_cell
        assert build_grid_mdp(loaded).to_json() == build_grid_mdp(spec).to_json()

    def test_ascii_render(self):
        spec, _ = canonical_case_study()
        art = render_ascii(spec)
        lines = art.splitlines()
        assert len(lines) == 2 * spec.height + 1
        for prop in ("P", "D1", "D2", "D3", "Base"):
            assert prop[:4] in art
        assert "=" in art   # door marker


class TestStep:
    def test_empirical_intended_rate(self):
        m = build_grid_mdp(plain_grid())
        rng = random.Random(0)
        hits = sum(m.step((2, 2), "N", rng).next_state == (2, 3) for _ in range(20000))
        assert abs(hits / 20000 - 0.97) < 0.005

    def test_reward_on_occupancy(self):
        spec, _ = canonical_case_study()
        m = build_grid_mdp(spec)
        rng = random.Random(1)
        cell = max(spec.reward_cells, key=spec.reward_cells.get)
        assert m.step(cell, "Stay", rng).reward == spec.reward_cells[cell]
        assert m.step((0, 0), "Stay", rng).reward == 0.0

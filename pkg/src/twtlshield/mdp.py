"""Labeled MDPs with interval-bounded transition probabilities.

The model separates what the learner may use (states, actions, labels, and
per-transition probability intervals) from what only the simulator knows
(the true transition law and the reward source).  Absent interval entries
mean the transition is impossible ([0, 0]).
"""

from __future__ import annotations

import bisect
import json
import math
from dataclasses import dataclass

FEASIBILITY_TOL = 1e-9


class MdpError(Exception):
    pass


class MissingDynamicsError(MdpError):
    pass


@dataclass(frozen=True)
class Transition:
    state: object
    action: object
    next_state: object
    reward: float


class LabeledIntervalMdp:
    """States, actions, labels, interval bounds, and optional true dynamics.

    ``bounds`` maps (s, a, s') to (lo, hi).  ``enabled`` restricts the action
    set per state (walls and one-way doors remove actions outright); states
    not listed keep the full action set.  ``reward_fn`` is only queried by
    :meth:`step`, never handed to learning code.
    """

    def __init__(self, states, actions, labels, bounds, true_dynamics=None,
                 reward_fn=None, enabled=None):
        self.states = tuple(states)
        self.actions = tuple(actions)
        self.labels = {s: frozenset(labels.get(s, ())) for s in self.states}
        self.bounds = dict(bounds)
        self.true_dynamics = dict(true_dynamics) if true_dynamics is not None else None
        self.reward_fn = reward_fn
        state_set = set(self.states)
        full = tuple(self.actions)
        self.enabled = {s: full for s in self.states}
        if enabled is not None:
            for s, acts in enabled.items():
                if s not in state_set:
                    raise MdpError(f"enabled-action entry for unknown state {s!r}")
                self.enabled[s] = tuple(acts)
        self._index_support()
        self._samplers = self._build_samplers()

    def _index_support(self):
        order = {s: i for i, s in enumerate(self.states)}
        support = {}
        for (s, a, s2), (lo, hi) in self.bounds.items():
            if hi > 0.0:
                support.setdefault((s, a), []).append((order.get(s2, -1), s2, lo, hi))
        self._support = {}
        for key, entries in support.items():
            entries.sort()
            self._support[key] = tuple((s2, lo, hi) for _, s2, lo, hi in entries)

    def support(self, s, a):
        """Successors with positive upper bound, as (s', lo, hi) tuples."""
        return self._support.get((s, a), ())

    def _build_samplers(self):
        samplers = {}
        if self.true_dynamics is None:
            return samplers
        rows = {}
        for (s, a, s2), p in self.true_dynamics.items():
            if p > 0.0:
                rows.setdefault((s, a), []).append((s2, p))
        order = {s: i for i, s in enumerate(self.states)}
        for key, entries in rows.items():
            entries.sort(key=lambda item: order.get(item[0], -1))
            succs = [s2 for s2, _ in entries]
            cum = []
            total = 0.0
            for _, p in entries:
                total += p
                cum.append(total)
            cum[-1] = max(cum[-1], 1.0)
            samplers[key] = (succs, cum)
        return samplers

    def sample_next(self, s, a, rng):
        if self.true_dynamics is None:
            raise MissingDynamicsError("this model has no true dynamics to simulate")
        try:
            succs, cum = self._samplers[(s, a)]
        except KeyError:
            raise MdpError(f"no transitions defined for state {s!r} action {a!r}")
        return succs[bisect.bisect_right(cum, rng.random())] if len(succs) > 1 else succs[0]

    def step(self, s, a, rng) -> Transition:
        """Sample one transition from the true dynamics."""
        if a not in self.enabled[s]:
            raise MdpError(f"action {a!r} is not enabled in state {s!r}")
        s2 = self.sample_next(s, a, rng)
        reward = float(self.reward_fn(s, a)) if self.reward_fn is not None else 0.0
        return Transition(s, a, s2, reward)

    def validate(self):
        """Check interval and dynamics invariants; returns a list of violations."""
        problems = []
        for (s, a, s2), (lo, hi) in sorted(self.bounds.items(), key=repr):
            if not (0.0 <= lo <= hi <= 1.0):
                problems.append(f"bounds out of order for ({s!r},{a!r},{s2!r}): [{lo},{hi}]")
        for s in self.states:
            if not self.enabled[s]:
                problems.append(f"state {s!r} has no enabled actions")
            for a in self.enabled[s]:
                entries = self.support(s, a)
                lo_sum = math.fsum(lo for _, lo, _ in entries)
                hi_sum = math.fsum(hi for _, _, hi in entries)
                if lo_sum > 1.0 + FEASIBILITY_TOL:
                    problems.append(f"infeasible bounds at ({s!r},{a!r}): sum of lower bounds {lo_sum:.6f} > 1")
                if hi_sum < 1.0 - FEASIBILITY_TOL:
                    problems.append(f"infeasible bounds at ({s!r},{a!r}): sum of upper bounds {hi_sum:.6f} < 1")
        if self.true_dynamics is not None:
            rows = {}
            for (s, a, s2), p in self.true_dynamics.items():
                rows.setdefault((s, a), []).append((s2, p))
                lo, hi = self.bounds.get((s, a, s2), (0.0, 0.0))
                if not (lo - 1e-12 <= p <= hi + 1e-12):
                    problems.append(
                        f"true probability {p:.6f} outside bounds [{lo},{hi}] for ({s!r},{a!r},{s2!r})")
            for s in self.states:
                for a in self.enabled[s]:
                    entries = rows.get((s, a))
                    if entries is None:
                        problems.append(f"true dynamics missing for ({s!r},{a!r})")
                        continue
                    total = math.fsum(p for _, p in entries)
                    if abs(total - 1.0) > FEASIBILITY_TOL:
                        problems.append(f"true dynamics at ({s!r},{a!r}) sum to {total!r}, not 1")
        return problems

    def to_json(self) -> str:
        doc = {
            "states": [repr(s) for s in self.states],
            "actions": [repr(a) for a in self.actions],
            "labels": {repr(s): sorted(self.labels[s]) for s in self.states},
            "bounds": [[repr(s), repr(a), repr(s2), lo, hi]
                       for (s, a, s2), (lo, hi) in sorted(self.bounds.items(), key=repr)],
            "enabled": {repr(s): [repr(a) for a in acts] for s, acts in self.enabled.items()},
        }
        if self.true_dynamics is not None:
            doc["dynamics"] = [[repr(s), repr(a), repr(s2), p]
                               for (s, a, s2), p in sorted(self.true_dynamics.items(), key=repr)]
        return json.dumps(doc, indent=2, sort_keys=True)


def mdp_from_json(text: str, reward_values=None) -> LabeledIntervalMdp:
    """Load a model from the JSON layout produced by :meth:`to_json`.

    States and actions are kept as the literal strings from the document.
    ``reward_values`` optionally maps state strings to per-step bonuses.
    """
    doc = json.loads(text)
    states = list(doc["states"])
    actions = list(doc["actions"])
    labels = {s: frozenset(props) for s, props in doc.get("labels", {}).items()}
    bounds = {(s, a, s2): (float(lo), float(hi)) for s, a, s2, lo, hi in doc.get("bounds", [])}
    dynamics = None
    if "dynamics" in doc:
        dynamics = {(s, a, s2): float(p) for s, a, s2, p in doc["dynamics"]}
    enabled = doc.get("enabled")
    reward_fn = None
    if reward_values is None:
        reward_values = doc.get("rewards")
    if reward_values:
        table = dict(reward_values)
        reward_fn = lambda s, a: table.get(s, 0.0)
    return LabeledIntervalMdp(states, actions, labels, bounds, dynamics, reward_fn, enabled)

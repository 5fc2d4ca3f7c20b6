"""Time-indexed product of a labeled interval MDP and a total automaton.

Product states are (s, q, t) triples.  The automaton component tracks task
progress: the start state's label counts as the first observation, so the
initial set is {(s, delta(q_init, l(s)), 0)} over all MDP states, and a move
to s' advances q by delta(q, l(s')).  Only states reachable from the initial
set are enumerated.

Interval bounds project unchanged onto product edges whose automaton move
matches the successor's label; all other edges are absent.  Every reachable
state at the final layer must be accepting or trash; non-accepting leftovers
(possible only when the horizon undershoots the formula's time bound) are
coerced to trash and reported in ``coerced``.
"""

from __future__ import annotations

import json

from .automaton import TotalAutomaton, UnknownSymbolError
from .mdp import LabeledIntervalMdp


class ProductError(Exception):
    pass


class TimeTotalProductMdp:
    """Reachable layered product with room for reachability results.

    ``f_values``, ``act_sets``, ``pi_c`` and ``kappa`` start empty and are
    written exactly once by the pruning pass; afterwards the object is
    treated as read-only.
    """

    def __init__(self, mdp: LabeledIntervalMdp, automaton: TotalAutomaton, horizon: int):
        if horizon < 0:
            raise ProductError("horizon must be nonnegative")
        self.mdp = mdp
        self.automaton = automaton
        self.horizon = horizon
        self._label_ok()
        self._q_step = {}
        self._enumerate_layers()
        self.f_values = {}
        self.act_sets = {}
        self.pi_c = {}
        self.kappa = {}
        self.initial_threshold = None

    def _label_ok(self):
        for s in self.mdp.states:
            try:
                self.automaton.symbol_id(self.mdp.labels[s])
            except UnknownSymbolError as exc:
                raise ProductError(f"label of state {s!r} is not in the automaton alphabet: {exc}")

    def _after(self, q, s):
        """delta(q, l(s)), cached per (q, s)."""
        key = (q, s)
        nxt = self._q_step.get(key)
        if nxt is None:
            nxt = self.automaton.step(q, self.mdp.labels[s])
            self._q_step[key] = nxt
        return nxt

    def _enumerate_layers(self):
        aut = self.automaton
        start = {(s, self._after(aut.initial, s)) for s in self.mdp.states}
        self.initial = tuple(sorted(((s, q, 0) for s, q in start), key=repr))
        layers = [tuple(sorted(start, key=repr))]
        current = start
        for t in range(self.horizon):
            nxt = set()
            for s, q in current:
                for a in self.mdp.enabled[s]:
                    for s2, _, _ in self.mdp.support(s, a):
                        nxt.add((s2, self._after(q, s2)))
            layers.append(tuple(sorted(nxt, key=repr)))
            current = nxt
        self.layers = layers
        self.layer_sets = [frozenset(layer) for layer in layers]
        accepting = self.automaton.accepting
        self.coerced = frozenset((s, q) for s, q in layers[self.horizon]
                                 if q not in accepting and q != self.automaton.trash)

    def is_accepting(self, p) -> bool:
        return p[1] in self.automaton.accepting

    def is_trash(self, p) -> bool:
        s, q, t = p
        if q == self.automaton.trash:
            return True
        return t == self.horizon and q not in self.automaton.accepting

    def successors(self, p, a):
        """Eligible successors of p under a, as ((s', q', t+1), lo, hi)."""
        s, q, t = p
        if t >= self.horizon:
            return ()
        return tuple(((s2, self._after(q, s2), t + 1), lo, hi)
                     for s2, lo, hi in self.mdp.support(s, a))

    def n_states(self) -> int:
        return sum(len(layer) for layer in self.layers)

    def summary(self) -> dict:
        accepting = self.automaton.accepting
        trash = self.automaton.trash
        per_layer = []
        for t, layer in enumerate(self.layers):
            n_acc = sum(1 for _, q in layer if q in accepting)
            n_trash = sum(1 for s, q in layer
                          if q == trash or (t == self.horizon and q not in accepting))
            per_layer.append({"t": t, "states": len(layer),
                              "accepting": n_acc, "trash": n_trash})
        return {
            "horizon": self.horizon,
            "total_states": self.n_states(),
            "initial_states": len(self.initial),
            "coerced_terminal": len(self.coerced),
            "layers": per_layer,
        }

    def summary_json(self) -> str:
        return json.dumps(self.summary(), indent=2, sort_keys=True)

    def results_json(self) -> str:
        """f and pi_c keyed by (s, q, t) for offline inspection."""
        doc = {
            "f": {repr(p): v for p, v in sorted(self.f_values.items(), key=repr)},
            "pi_c": {repr(p): repr(a) for p, a in sorted(self.pi_c.items(), key=repr)},
            "act_sets": {repr(p): [repr(a) for a in acts]
                         for p, acts in sorted(self.act_sets.items(), key=repr)},
        }
        return json.dumps(doc, indent=2, sort_keys=True)


def build_product(mdp: LabeledIntervalMdp, automaton: TotalAutomaton, horizon: int) -> TimeTotalProductMdp:
    return TimeTotalProductMdp(mdp, automaton, horizon)


def project_bounds(product: TimeTotalProductMdp, p, a):
    """Successor list of (p', lo, hi); the interval is the MDP edge's interval."""
    return product.successors(p, a)

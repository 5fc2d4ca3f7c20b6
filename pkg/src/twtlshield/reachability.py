"""Worst-case satisfaction bounds and action pruning on the time-total product.

For each product state the backward recursion computes f(p), the largest
lower bound on the probability of reaching an accepting state in the
remaining steps, assuming transition probabilities may sit anywhere inside
their intervals.  Per action the bound is the optimum of a small linear
program (minimize sum f_j * x_j over the box-constrained simplex slice),
solved in closed form by greedy mass assignment: everything starts at its
lower bound and the remaining mass goes to the successors with the smallest
f first.

One-shot pruning removes an action wherever some possible successor falls
below the desired probability; multi-shot splits the horizon into segments
with per-segment thresholds whose product is the desired probability, and
prunes each segment against a 0/1 boundary derived from the next segment.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .mdp import MissingDynamicsError
from .product import TimeTotalProductMdp

FEASIBILITY_TOL = 1e-9


class ReachabilityError(Exception):
    pass


class InfeasibleIntervalError(ReachabilityError):
    """The interval constraints admit no probability distribution."""

    def __init__(self, message, state=None, action=None):
        if state is not None:
            message = f"{message} at state {state!r}, action {action!r}"
        super().__init__(message)
        self.state = state
        self.action = action


class MultiShotInfeasibleError(ReachabilityError):
    def __init__(self, segment):
        super().__init__(f"segment boundary {segment} has no accepting states; "
                         f"no multi-shot guarantee is possible with this plan")
        self.segment = segment


def solve_kappa(values, los, his):
    """Exact minimum of sum(values * x) s.t. sum(x) = 1, los <= x <= his.

    Returns (kappa, minimizing distribution).  Ties in ``values`` are broken
    by index order; the optimum value does not depend on tie order.
    """
    n = len(values)
    lo_sum = math.fsum(los)
    hi_sum = math.fsum(his)
    if lo_sum > 1.0 + FEASIBILITY_TOL:
        raise InfeasibleIntervalError(f"sum of lower bounds {lo_sum:.9f} exceeds 1")
    if hi_sum < 1.0 - FEASIBILITY_TOL:
        raise InfeasibleIntervalError(f"sum of upper bounds {hi_sum:.9f} is below 1")
    dist = list(los)
    remaining = 1.0 - lo_sum
    if remaining > 0.0:
        for j in sorted(range(n), key=lambda j: (values[j], j)):
            room = his[j] - los[j]
            if room <= 0.0:
                continue
            add = room if room < remaining else remaining
            dist[j] += add
            remaining -= add
            if remaining <= 0.0:
                break
    kappa = math.fsum(v * d for v, d in zip(values, dist))
    return min(max(kappa, 0.0), 1.0), dist


def eq6_boundary(product: TimeTotalProductMdp) -> dict:
    """Terminal values: 1 on accepting states, 0 on trash (incl. coerced)."""
    t = product.horizon
    return {(s, q, t): (1.0 if q in product.automaton.accepting else 0.0)
            for s, q in product.layers[t]}


def _sweep(product, t_hi, t_lo, boundary_f, prune_below=None, store_kappa=False):
    """Backward recursion from layer ``t_hi`` down to ``t_lo``.

    Returns (f, act, pi_c, kappa); ``act`` is None unless pruning.  Accepting
    and trash states keep their 0/1 values and full action sets at every
    layer.  Pruned actions still get a kappa value, and the maximization for
    f and pi_c runs over all enabled actions, pruned or not.
    """
    mdp = product.mdp
    accepting = product.automaton.accepting
    trash = product.automaton.trash
    after = product._after
    support = mdp.support
    f = {}
    act = {} if prune_below is not None else None
    pi_c = {}
    kappa = {} if store_kappa else None

    fnext = {}
    for s, q in product.layers[t_hi]:
        p = (s, q, t_hi)
        v = boundary_f[p]
        f[p] = v
        fnext[(s, q)] = v

    for t in range(t_hi - 1, t_lo - 1, -1):
        fcur = {}
        for s, q in product.layers[t]:
            p = (s, q, t)
            acts = mdp.enabled[s]
            if not acts:
                raise ReachabilityError(f"state {s!r} has no enabled actions")
            if q in accepting:
                value = 1.0
                if act is not None:
                    act[p] = tuple(acts)
                pi_c[p] = acts[0]
            elif q == trash:
                value = 0.0
                if act is not None:
                    act[p] = tuple(acts)
                pi_c[p] = acts[0]
            else:
                keep = []
                best = -1.0
                best_a = acts[0]
                for a in acts:
                    values = []
                    los = []
                    his = []
                    unsafe = False
                    for s2, lo, hi in support(s, a):
                        fv = fnext[(s2, after(q, s2))]
                        values.append(fv)
                        los.append(lo)
                        his.append(hi)
                        if prune_below is not None and fv < prune_below:
                            unsafe = True
                    try:
                        k, _ = solve_kappa(values, los, his)
                    except InfeasibleIntervalError as exc:
                        raise InfeasibleIntervalError(str(exc), state=p, action=a)
                    if kappa is not None:
                        kappa[(p, a)] = k
                    if act is not None and not unsafe:
                        keep.append(a)
                    if k > best:
                        best = k
                        best_a = a
                value = best
                if act is not None:
                    act[p] = tuple(keep)
                pi_c[p] = best_a
            f[p] = value
            fcur[(s, q)] = value
        fnext = fcur
    return f, act, pi_c, kappa


def backward_pass(product, t_start, t_end, boundary_f):
    """Plain recursion (no pruning) between two layers; returns (f, kappa, pi_c)."""
    if not (0 <= t_end < t_start <= product.horizon):
        raise ReachabilityError(f"need 0 <= t_end < t_start <= {product.horizon}")
    f, _, pi_c, kappa = _sweep(product, t_start, t_end, boundary_f, store_kappa=True)
    return f, kappa, pi_c


@dataclass(frozen=True)
class MultiShotPlan:
    """Segment timestamps 0 = t_0 < ... < t_N = T with per-segment thresholds."""

    timestamps: tuple
    thresholds: tuple

    def __post_init__(self):
        ts = tuple(int(t) for t in self.timestamps)
        th = tuple(float(x) for x in self.thresholds)
        object.__setattr__(self, "timestamps", ts)
        object.__setattr__(self, "thresholds", th)
        if len(ts) < 2 or ts[0] != 0:
            raise ValueError("timestamps must start at 0 and contain at least one segment")
        if any(b <= a for a, b in zip(ts, ts[1:])):
            raise ValueError("timestamps must be strictly increasing")
        if len(th) != len(ts) - 1:
            raise ValueError("need exactly one threshold per segment")
        if any(not (0.0 < x <= 1.0) for x in th):
            raise ValueError("thresholds must lie in (0, 1]")

    @property
    def n_segments(self):
        return len(self.thresholds)

    @property
    def pr_des(self):
        return math.prod(self.thresholds)

    def check_product(self, pr_des, tol=1e-12):
        if abs(self.pr_des - pr_des) > tol:
            raise ValueError(f"thresholds multiply to {self.pr_des!r}, not {pr_des!r}")

    @classmethod
    def even(cls, pr_des, timestamps):
        """Equal per-segment thresholds: the N-th root of the target probability."""
        n = len(timestamps) - 1
        return cls(tuple(timestamps), (pr_des ** (1.0 / n),) * n)


@dataclass(frozen=True)
class ShieldBoundaries:
    """Where the learner's fallback flag resets.

    The flag always resets on accepting/trash states; with multi-shot pruning
    it additionally resets at every state of the interior segment boundaries.
    ``interior_accept[i]`` / ``interior_trash[i]`` are the boundary splits of
    segment i+1 (states at t_{i+1} classified by the next segment's bound);
    the last segment's boundary is the accepting/trash classification itself.
    """

    times: frozenset = field(default_factory=frozenset)
    interior_accept: tuple = ()
    interior_trash: tuple = ()

    def clears(self, product, p) -> bool:
        return product.is_accepting(p) or product.is_trash(p) or p[2] in self.times

    @classmethod
    def one_shot(cls):
        return cls()


def _store(product, f, act, pi_c, kappa, threshold):
    if product.f_values:
        raise ReachabilityError("product already holds pruning results; rebuild it first")
    product.f_values.update(f)
    product.act_sets.update(act)
    product.pi_c.update(pi_c)
    if kappa:
        product.kappa.update(kappa)
    product.initial_threshold = threshold


def one_shot_prune(product: TimeTotalProductMdp, pr_des, store_kappa=False):
    """Single pruning sweep over the whole horizon (threshold pr_des everywhere)."""
    if not (0.0 < pr_des <= 1.0):
        raise ValueError("pr_des must lie in (0, 1]")
    f, act, pi_c, kappa = _sweep(product, product.horizon, 0, eq6_boundary(product),
                                 prune_below=pr_des, store_kappa=store_kappa)
    _store(product, f, act, pi_c, kappa, pr_des)
    return product


def multi_shot_prune(product: TimeTotalProductMdp, plan: MultiShotPlan, store_kappa=False):
    """Segment-wise pruning; returns (product, boundaries).

    Segments are processed last to first.  The last segment uses the terminal
    0/1 boundary; each earlier segment treats the next segment's boundary
    states as accepting (1) where the next segment's bound meets its
    threshold and trash (0) elsewhere.  Action sets and the fallback policy
    concatenate across segments.
    """
    if plan.timestamps[-1] != product.horizon:
        raise ValueError(f"plan must end at the product horizon {product.horizon}, "
                         f"got {plan.timestamps[-1]}")
    n = plan.n_segments
    f_all = {}
    act_all = {}
    pi_all = {}
    kappa_all = {}
    interior_accept = []
    interior_trash = []

    boundary = eq6_boundary(product)
    f_seg = None
    for i in range(n, 0, -1):
        t_hi = plan.timestamps[i]
        t_lo = plan.timestamps[i - 1]
        if i < n:
            # Classify layer t_hi by the next segment's bound against its threshold.
            accept = frozenset(p for p in boundary_states if f_seg[p] >= plan.thresholds[i])
            if not accept:
                raise MultiShotInfeasibleError(i)
            interior_accept.append(accept)
            interior_trash.append(frozenset(boundary_states) - accept)
            boundary = {p: (1.0 if p in accept else 0.0) for p in boundary_states}
        f_seg, act, pi_c, kappa = _sweep(product, t_hi, t_lo, boundary,
                                         prune_below=plan.thresholds[i - 1],
                                         store_kappa=store_kappa)
        boundary_states = [(s, q, t_lo) for s, q in product.layers[t_lo]]
        # Keep the segment's own values for t in [t_lo, t_hi); the boundary
        # layer t_hi retains the next segment's (or terminal) values.
        for p, v in f_seg.items():
            if p[2] < t_hi or i == n:
                f_all.setdefault(p, v)
        act_all.update(act)
        pi_all.update(pi_c)
        if kappa:
            kappa_all.update(kappa)

    interior_accept.reverse()
    interior_trash.reverse()
    boundaries = ShieldBoundaries(times=frozenset(plan.timestamps[1:-1]),
                                  interior_accept=tuple(interior_accept),
                                  interior_trash=tuple(interior_trash))
    _store(product, f_all, act_all, pi_all, kappa_all, plan.thresholds[0])
    return product, boundaries


def check_initial(product: TimeTotalProductMdp, pr_des):
    """Initial states whose bound misses pr_des, as (state, f) pairs; empty means ok."""
    if not product.f_values:
        raise ReachabilityError("run a pruning pass before checking initial states")
    violators = []
    for p in product.initial:
        v = product.f_values[p]
        if v < pr_des:
            violators.append((p, v))
    return violators


def exact_reach_probability(product: TimeTotalProductMdp, policy, true_dynamics=None):
    """Exact accepting-reach probability under a fixed policy and known dynamics.

    Backward dynamic program over the true transition law; serves as the
    validation oracle for the worst-case bound (it must dominate f pointwise).
    """
    dyn = true_dynamics if true_dynamics is not None else product.mdp.true_dynamics
    if dyn is None:
        raise MissingDynamicsError("exact reachability needs true dynamics")
    rows = {}
    for (s, a, s2), pr in dyn.items():
        if pr > 0.0:
            rows.setdefault((s, a), []).append((s2, pr))
    after = product._after
    accepting = product.automaton.accepting
    trash = product.automaton.trash
    choose = policy if callable(policy) else policy.__getitem__

    values = {}
    t = product.horizon
    for s, q in product.layers[t]:
        values[(s, q, t)] = 1.0 if q in accepting else 0.0
    for t in range(product.horizon - 1, -1, -1):
        for s, q in product.layers[t]:
            p = (s, q, t)
            if q in accepting:
                values[p] = 1.0
            elif q == trash:
                values[p] = 0.0
            else:
                a = choose(p)
                total = 0.0
                for s2, pr in rows[(s, a)]:
                    total += pr * values[(s2, after(q, s2), t + 1)]
                values[p] = total
    return values

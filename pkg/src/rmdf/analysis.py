"""Consistency, tick/hyperperiod derivation and symbolic liveness checking."""

from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from math import gcd, lcm
from functools import reduce

from .arith import rat_gcd_set, rat_lcm_set
from .graph import ALL_BRANCHES, CONTROLLED, Kind, control_area, valuation
from .tokens import job_amount


# ---------------------------------------------------------------------------
# topology matrix

@dataclass(frozen=True)
class TopologyMatrix:
    channels: tuple
    actors: tuple
    rows: dict                      # channel id -> {actor id: signed rate}
    self_loops: tuple = ()          # ids of rows excluded from the null space

    def entry(self, channel, actor):
        return self.rows[channel].get(actor, Fraction(0))

    def as_lists(self):
        return [[self.entry(c, a) for a in self.actors] for c in self.channels]

    def balance(self, counts):
        """Row-wise G . r (self-loop rows skipped)."""
        return {c: sum((v * counts.get(a, 0) for a, v in row.items()), Fraction(0))
                for c, row in self.rows.items() if c not in self.self_loops}


def _rates(g, values):
    out = {}
    for c in g.channels:
        if c.control:
            out[c.id] = (Fraction(1), Fraction(1))
            continue
        out[c.id] = tuple(Fraction(values[r]) if isinstance(r, str) else Fraction(r)
                          for r in (c.prod, c.cons))
    return out


def topology_matrix(g, mode=None):
    values = valuation(g, mode)
    unbound = [p for p in g.parameters if p not in values]
    if unbound:
        raise ValueError(f"mode leaves parameters unbound: {unbound}")
    rates = _rates(g, values)
    rows, loops = {}, []
    for c in g.channels:
        p, q = rates[c.id]
        if c.self_loop:
            rows[c.id] = {c.producer: p - q}
            loops.append(c.id)
        else:
            rows[c.id] = {c.producer: p, c.consumer: -q}
    return TopologyMatrix(tuple(c.id for c in g.channels), tuple(g.ids), rows, tuple(loops))


# ---------------------------------------------------------------------------
# repetition vector

@dataclass(frozen=True)
class InconsistencyReport:
    reason: str
    channel: str | None = None
    actors: tuple = ()
    consistent: bool = field(default=False, init=False)

    def __str__(self):
        where = f" on channel {self.channel}" if self.channel else ""
        return f"inconsistent{where}: {self.reason}"


@dataclass(frozen=True)
class RepetitionVector:
    counts: dict
    components: tuple = ()           # tuple of frozensets of active actors
    consistent: bool = field(default=True, init=False)

    def __getitem__(self, actor):
        return self.counts[actor]

    def get(self, actor, default=None):
        return self.counts.get(actor, default)

    def items(self):
        return self.counts.items()

    def __eq__(self, other):
        if isinstance(other, dict):
            return self.counts == other
        return NotImplemented if not isinstance(other, RepetitionVector) else self.counts == other.counts

    __hash__ = None


def _inactive(g, rates):
    """Actors that never receive data under this valuation."""
    dead = set()
    todo = deque(c.consumer for c in g.channels
                 if not c.self_loop and rates[c.id][0] == 0 and rates[c.id][1] > 0)
    while todo:
        a = todo.popleft()
        if a in dead:
            continue
        dead.add(a)
        todo.extend(c.consumer for c in g.outputs(a)
                    if not c.self_loop and rates[c.id][1] > 0)
    return dead


def repetition_vector(g, mode=None):
    """Smallest positive integer job counts balancing every channel, or an
    :class:`InconsistencyReport`. Actors starved by a mode get count 0."""
    values = valuation(g, mode)
    rates = _rates(g, values)
    dead = _inactive(g, rates)
    live = [a for a in g.ids if a not in dead]
    edges = {a: [] for a in live}
    for c in g.channels:
        p, q = rates[c.id]
        if c.producer in dead or c.consumer in dead:
            continue
        if c.self_loop:
            if p != q:
                return InconsistencyReport("self-loop rates differ", c.id, (c.producer,))
            continue
        if p == 0 and q == 0:
            continue
        if q == 0:
            return InconsistencyReport("tokens produced but never consumed",
                                       c.id, (c.producer, c.consumer))
        edges[c.producer].append((c, c.consumer, p / q))
        edges[c.consumer].append((c, c.producer, q / p))

    ratio, components = {}, []
    for root in live:
        if root in ratio:
            continue
        ratio[root] = Fraction(1)
        comp = [root]
        todo = deque([root])
        while todo:
            a = todo.popleft()
            for c, b, k in edges[a]:
                want = ratio[a] * k
                if b not in ratio:
                    ratio[b] = want
                    comp.append(b)
                    todo.append(b)
                elif ratio[b] != want:
                    return InconsistencyReport("balance conditions have no positive solution",
                                               c.id, (c.producer, c.consumer))
        scale = reduce(lcm, (ratio[a].denominator for a in comp))
        ints = [ratio[a] * scale for a in comp]
        div = reduce(gcd, (int(x) for x in ints))
        for a, x in zip(comp, ints):
            ratio[a] = int(x) // div
        components.append(frozenset(comp))

    counts = {a: (ratio[a] if a in ratio else 0) for a in g.ids}
    for comp in components:
        timed = [g.actor(a) for a in g.ids if a in comp and g.actor(a).timed]
        spans = {a.id: counts[a.id] * a.period for a in timed}
        if len(set(spans.values())) > 1:
            first = timed[0]
            other = next(a for a in timed if spans[a.id] != spans[first.id])
            return InconsistencyReport(
                "job counts are not proportional to the timed actors' frequencies",
                None, (first.id, other.id))
    return RepetitionVector(counts, tuple(components))


# ---------------------------------------------------------------------------
# tick and hyperperiod

def compute_tick(g):
    timed = g.timed_actors
    if not timed:
        raise ValueError("tick needs at least one timed actor")
    values = [a.period for a in timed] + [a.phase for a in timed if a.phase]
    return rat_gcd_set(values)


@dataclass(frozen=True)
class Hyperperiod:
    length: Fraction
    jobs: RepetitionVector
    consistent: bool = field(default=True, init=False)


def compute_hyperperiod(g, mode=ALL_BRANCHES):
    """Smallest span L such that every timed component runs an integral
    number of its minimal repetitions in L, with the per-actor job counts."""
    if not g.timed_actors:
        raise ValueError("hyperperiod needs at least one timed actor")
    rv = repetition_vector(g, mode)
    if not rv.consistent:
        return rv
    spans = {}
    for comp in rv.components:
        timed = [g.actor(a) for a in g.ids if a in comp and g.actor(a).timed]
        if timed:
            spans[comp] = rv[timed[0].id] * timed[0].period
    length = rat_lcm_set(spans.values())
    counts = dict(rv.counts)
    for comp, span in spans.items():
        k = length / span
        for a in comp:
            counts[a] = int(counts[a] * k)
    return Hyperperiod(length, RepetitionVector(counts, rv.components))


# ---------------------------------------------------------------------------
# liveness

@dataclass(frozen=True)
class Deadlock:
    tick: int
    time: Fraction
    actor: str
    job: int
    channel: str
    deficit: Fraction
    blocked_actor: str          # timed actor whose mandatory job could not fire
    blocked_job: int
    modes: tuple = ()

    def __str__(self):
        return (f"deadlock: tick {self.tick}, {self.actor} job {self.job}, "
                f"channel {self.channel}, deficit {self.deficit}")


@dataclass(frozen=True)
class LivenessReport:
    live: bool
    tick: Fraction | None
    hyperperiod: Fraction | None
    deadlock: Deadlock | None = None
    runs: tuple = ()            # ((mode sequence, Deadlock | None), ...)
    restored: bool = True       # every channel back at its initial level

    def __str__(self):
        return "live" if self.live else str(self.deadlock)


class _Symbolic:
    """Tick-by-tick symbolic execution with exact token levels."""

    def __init__(self, g, caps, modes, nominal_period, tick):
        self.g, self.caps, self.modes = g, caps, modes
        self.nominal_period, self.tick = nominal_period, tick
        self.level = {c.id: Fraction(c.init) for c in g.channels}
        self.ctl = {c.id: deque() for c in g.channels if c.control}
        self.done = {a: 0 for a in g.ids}
        self.order = {a: i for i, a in enumerate(g.ids)}
        self.dirty = set(g.ids)         # actors whose inputs grew since last check

    def _values(self, a):
        """Parameter valuation for the next job of ``a``, or a missing
        control channel."""
        if self.g.actor(a).kind not in CONTROLLED:
            return {}, None
        ctl = next(c for c in self.g.inputs(a) if c.control)
        if not self.ctl[ctl.id]:
            return None, ctl.id
        return valuation(self.g, self.ctl[ctl.id][0]), None

    def shortfall(self, a):
        """First insufficient input of the next job as (channel, deficit)."""
        n = self.done[a] + 1
        values, missing = self._values(a)
        if missing:
            return missing, Fraction(1)
        for c in self.g.inputs(a):
            need = job_amount(self.g, c, "cons", n, values)
            if self.level[c.id] < need:
                return c.id, need - self.level[c.id]
        return None

    def fire(self, a):
        g, n = self.g, self.done[a] + 1
        values, _ = self._values(a)
        mode = None
        for c in g.inputs(a):
            self.level[c.id] -= job_amount(g, c, "cons", n, values)
            if c.control:
                mode = self.ctl[c.id].popleft()
        if g.actor(a).kind is Kind.MODE_DECIDER:
            mode = self.modes[(n - 1) % len(self.modes)]
        for c in g.outputs(a):
            self.level[c.id] += job_amount(g, c, "prod", n, values)
            if c.control:
                self.ctl[c.id].append(mode)
        self.done[a] = n

    def nominal(self, a, n):
        actor = self.g.actor(a)
        return actor.phase + (n - 1) * self.nominal_period[a]

    def settle(self, t):
        """Fire everything enabled at time t; timed actors only when due.

        A blocked untimed actor stays blocked until one of its inputs grows,
        so only actors fed since their last check, plus the timed actors
        due now, need to be looked at."""
        work = self.dirty | {a.id for a in self.g.timed_actors
                             if self.done[a.id] < self.caps[a.id]
                             and a.activation(self.done[a.id] + 1) == t}
        self.dirty = set()
        while work:
            a = min(work, key=self.order.__getitem__)
            work.discard(a)
            actor = self.g.actor(a)
            while self.done[a] < self.caps[a]:
                if actor.timed and actor.activation(self.done[a] + 1) != t:
                    break
                if self.shortfall(a) is not None:
                    break
                self.fire(a)
                work.update(c.consumer for c in self.g.outputs(a))

    def diagnose(self, a, t, tick_index):
        """Walk back from a blocked job to the deepest job that is already
        due (by its nominal index time) and report its blocking channel."""
        cur, n = a, self.done[a] + 1
        chan, deficit = self.shortfall(cur)
        seen = {(cur, n)}
        while True:
            p = self.g.channel(chan).producer
            pn = self.done[p] + 1
            if (p, pn) in seen or pn > self.caps[p] or p == cur:
                break
            pa = self.g.actor(p)
            if pa.timed and pa.activation(pn) > t:
                break
            if self.nominal_period.get(p) is not None and self.nominal(p, pn) > t:
                break
            nxt = self.shortfall(p)
            if nxt is None:
                break
            seen.add((p, pn))
            cur, n = p, pn
            chan, deficit = nxt
        return Deadlock(tick_index, t, cur, n, chan, deficit, a, self.done[a] + 1,
                        tuple(self.modes))


def _run(g, caps, hyper, tick, modes, area):
    nominal = {a: (hyper / caps[a] if hyper and caps[a] else None) for a in g.ids}
    state = _Symbolic(g, caps, modes, nominal, tick)
    if tick is None:
        state.settle(Fraction(0))
        ticks = 0
    else:
        ticks = int(hyper / tick)
        for i in range(ticks):
            t = i * tick
            state.settle(t)
            for a in g.timed_actors:
                n = state.done[a.id] + 1
                if n <= caps[a.id] and a.activation(n) == t:
                    return state.diagnose(a.id, t, i), state
    for a in g.ids:
        if a in area or state.done[a] >= caps[a]:
            continue
        t = Fraction(0) if tick is None else ticks * tick
        return state.diagnose(a, t, ticks), state
    return None, state


def check_liveness(g, mode_sequence="all-modes"):
    """Symbolic execution over one hyperperiod.

    ``mode_sequence`` is a list of mode names cycled over the decider jobs,
    ``None`` for graphs without modes, or ``"all-modes"``: every constant
    mode plus the sequence alternating through all modes.
    """
    modes = g.mode_table.names
    if mode_sequence == "all-modes":
        runs = [(m,) for m in modes]
        if len(modes) > 1:
            runs.append(tuple(modes))
        runs = runs or [()]
    elif mode_sequence is None:
        runs = [()]
    else:
        runs = [tuple(mode_sequence)]

    area = set()
    for a in g.actors:
        if a.kind is Kind.MODE_DECIDER:
            area |= control_area(g, a.id)

    if g.timed_actors:
        hp = compute_hyperperiod(g)
        if not hp.consistent:
            raise ValueError(f"liveness needs a consistent graph: {hp}")
        caps, hyper, tick = hp.jobs.counts, hp.length, compute_tick(g)
    else:
        rv = repetition_vector(g, ALL_BRANCHES)
        if not rv.consistent:
            raise ValueError(f"liveness needs a consistent graph: {rv}")
        caps, hyper, tick = rv.counts, None, None

    results, first, restored = [], None, True
    for seq in runs:
        if not seq and g.parameters:
            raise ValueError("mode-dependent graph needs a mode sequence")
        dl, state = _run(g, caps, hyper, tick, seq, area)
        results.append((seq, dl))
        if dl is None:
            restored &= all(state.level[c.id] == c.init for c in g.channels)
        first = first or dl
    return LivenessReport(first is None, tick, hyper, first, tuple(results),
                          restored and first is None)

"""RMDF graph data model and structural well-formedness checks."""

from collections import deque
from dataclasses import dataclass, field, replace
from enum import Enum
from fractions import Fraction
from functools import cached_property


class Kind(str, Enum):
    USUAL = "usual"
    TIMED = "timed"
    DUPLICATER = "duplicater"
    SPLITTER = "splitter"
    JOINER = "joiner"
    CONTROLLED_SPLITTER = "controlled_splitter"
    CONTROLLED_JOINER = "controlled_joiner"
    MODE_DECIDER = "mode_decider"


ROUTING = frozenset({Kind.DUPLICATER, Kind.SPLITTER, Kind.JOINER,
                     Kind.CONTROLLED_SPLITTER, Kind.CONTROLLED_JOINER})
CONTROLLED = frozenset({Kind.CONTROLLED_SPLITTER, Kind.CONTROLLED_JOINER})

DEFAULT_BCET = Fraction(3, 25)
DEFAULT_WCET = Fraction(1, 5)

# Mode selector meaning "every conditional branch may run in the same
# iteration"; used for hyperperiods and timing windows.
ALL_BRANCHES = "*"


@dataclass(frozen=True)
class Actor:
    id: str
    kind: Kind = Kind.USUAL
    bcet: Fraction = DEFAULT_BCET
    wcet: Fraction = DEFAULT_WCET
    frequency: Fraction | None = None   # Hz, timed actors only
    phase: Fraction = Fraction(0)       # ms

    @property
    def timed(self):
        return self.kind is Kind.TIMED

    @property
    def routing(self):
        return self.kind in ROUTING

    @property
    def period(self):
        """Period in ms, ``None`` for untimed actors."""
        if not self.frequency:
            return None
        return Fraction(1000) / self.frequency

    def activation(self, n):
        return self.phase + (n - 1) * self.period


def timed(id, frequency, phase=0, bcet=DEFAULT_BCET, wcet=DEFAULT_WCET):
    return Actor(id, Kind.TIMED, Fraction(bcet), Fraction(wcet),
                 Fraction(frequency), Fraction(phase))


def routing(id, kind):
    return Actor(id, Kind(kind), Fraction(0), Fraction(0))


@dataclass(frozen=True)
class Channel:
    """A FIFO edge. Rates are ``Fraction`` constants or parameter names."""
    id: str
    producer: str
    consumer: str
    prod: Fraction | str = Fraction(1)
    cons: Fraction | str = Fraction(1)
    init: Fraction = Fraction(0)
    control: bool = False

    @property
    def self_loop(self):
        return self.producer == self.consumer

    @property
    def parametric(self):
        return isinstance(self.prod, str) or isinstance(self.cons, str)


@dataclass(frozen=True)
class ModeTable:
    """Mode name -> one-hot parameter valuation."""
    modes: tuple = ()   # ((mode, ((param, value), ...)), ...)

    @classmethod
    def from_dict(cls, table):
        return cls(tuple((m, tuple(vals.items())) for m, vals in table.items()))

    @property
    def names(self):
        return [m for m, _ in self.modes]

    def valuation(self, mode):
        for name, vals in self.modes:
            if name == mode:
                return dict(vals)
        raise KeyError(f"unknown mode {mode!r}")

    def __bool__(self):
        return bool(self.modes)


@dataclass(frozen=True)
class Graph:
    actors: tuple = ()
    channels: tuple = ()
    mode_table: ModeTable = field(default_factory=ModeTable)

    def __post_init__(self):
        object.__setattr__(self, "actors", tuple(self.actors))
        object.__setattr__(self, "channels", tuple(self.channels))

    @cached_property
    def _actor_index(self):
        return {a.id: a for a in self.actors}

    @cached_property
    def _channel_index(self):
        return {c.id: c for c in self.channels}

    @cached_property
    def _inputs(self):
        ins = {a.id: [] for a in self.actors}
        for c in self.channels:
            ins.setdefault(c.consumer, []).append(c)
        return ins

    @cached_property
    def _outputs(self):
        outs = {a.id: [] for a in self.actors}
        for c in self.channels:
            outs.setdefault(c.producer, []).append(c)
        return outs

    @cached_property
    def pattern_cache(self):
        return {}

    def actor(self, actor_id):
        try:
            return self._actor_index[actor_id]
        except KeyError:
            raise KeyError(f"unknown actor {actor_id!r}") from None

    def channel(self, channel_id):
        try:
            return self._channel_index[channel_id]
        except KeyError:
            raise KeyError(f"unknown channel {channel_id!r}") from None

    def inputs(self, actor_id):
        return self._inputs.get(actor_id, [])

    def outputs(self, actor_id):
        return self._outputs.get(actor_id, [])

    @property
    def ids(self):
        return [a.id for a in self.actors]

    @property
    def timed_actors(self):
        return [a for a in self.actors if a.timed]

    @cached_property
    def parameters(self):
        return sorted({r for c in self.channels for r in (c.prod, c.cons)
                       if isinstance(r, str)})

    def with_channel(self, channel_id, **changes):
        """Copy of the graph with one channel's fields replaced."""
        self.channel(channel_id)
        chans = tuple(replace(c, **changes) if c.id == channel_id else c
                      for c in self.channels)
        return replace(self, channels=chans)

    def with_actor(self, actor_id, **changes):
        self.actor(actor_id)
        actors = tuple(replace(a, **changes) if a.id == actor_id else a
                       for a in self.actors)
        return replace(self, actors=actors)

    def subgraph(self, actor_ids):
        """Induced subgraph on ``actor_ids``; keeps declaration order."""
        keep = set(actor_ids)
        return Graph(tuple(a for a in self.actors if a.id in keep),
                     tuple(c for c in self.channels
                           if c.producer in keep and c.consumer in keep),
                     self.mode_table)


def valuation(g, mode):
    """Parameter values for ``mode``: a mode name, ``ALL_BRANCHES``, a dict,
    or ``None`` for graphs without parametric rates."""
    if isinstance(mode, dict):
        return dict(mode)
    if mode == ALL_BRANCHES:
        return {p: 1 for p in g.parameters}
    if mode is None:
        if g.parameters:
            raise ValueError("graph has parametric rates; a mode is required")
        return {}
    try:
        return g.mode_table.valuation(mode)
    except KeyError:
        raise ValueError(f"unknown mode {mode!r}") from None


def rate_value(rate, values):
    if isinstance(rate, str):
        try:
            return Fraction(values[rate])
        except KeyError:
            raise ValueError(f"unbound parameter {rate!r}") from None
    return Fraction(rate)


def dispatch_pattern(g, actor_id, values=None):
    """Channel ids visited by successive jobs of a splitter (outputs) or
    joiner (inputs): lexicographic channel order, each repeated as many
    times as the numerator of its rate."""
    a = g.actor(actor_id)
    if a.kind is Kind.SPLITTER:
        chans = sorted(g.outputs(actor_id), key=lambda c: c.id)
        rates = [rate_value(c.prod, values or {}) for c in chans]
    elif a.kind is Kind.JOINER:
        chans = sorted(g.inputs(actor_id), key=lambda c: c.id)
        rates = [rate_value(c.cons, values or {}) for c in chans]
    else:
        raise ValueError(f"{actor_id!r} is not a splitter or joiner")
    pattern = []
    for c, r in zip(chans, rates):
        pattern.extend([c.id] * r.numerator)
    return pattern


# ---------------------------------------------------------------------------
# control areas

def governed(g, decider):
    """Controlled splitters/joiners reached from ``decider`` by control
    channels, possibly through duplicaters."""
    seen, found = set(), set()
    todo = deque([decider])
    while todo:
        a = todo.popleft()
        for c in g.outputs(a):
            if not c.control or c.consumer in seen:
                continue
            seen.add(c.consumer)
            kind = g.actor(c.consumer).kind
            if kind in CONTROLLED:
                found.add(c.consumer)
            elif kind is Kind.DUPLICATER:
                todo.append(c.consumer)
    return found


def control_area(g, decider):
    """Actors conditioned by ``decider``: everything between its controlled
    splitters and controlled joiners, routing actors excluded."""
    if g.actor(decider).kind is not Kind.MODE_DECIDER:
        raise ValueError(f"{decider!r} is not a mode decider")
    gov = governed(g, decider)
    area = set()
    todo = deque(c.consumer for s in sorted(gov)
                 if g.actor(s).kind is Kind.CONTROLLED_SPLITTER
                 for c in g.outputs(s) if not c.control)
    while todo:
        a = todo.popleft()
        if a in gov or a in area:
            continue
        area.add(a)
        todo.extend(c.consumer for c in g.outputs(a) if not c.control)
    return area


def controlling_decider(g, actor_id):
    """Mode decider whose control token reaches a controlled routing actor."""
    todo, seen = deque([actor_id]), {actor_id}
    while todo:
        a = todo.popleft()
        for c in g.inputs(a):
            if not c.control or c.producer in seen:
                continue
            kind = g.actor(c.producer).kind
            if kind is Kind.MODE_DECIDER:
                return c.producer
            if kind is Kind.DUPLICATER:
                seen.add(c.producer)
                todo.append(c.producer)
    return None


# ---------------------------------------------------------------------------
# validation

@dataclass(frozen=True, order=True)
class Violation:
    code: str
    subject: str
    message: str


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple = ()

    @property
    def ok(self):
        return not self.violations

    def codes(self):
        return {v.code for v in self.violations}

    def __str__(self):
        if self.ok:
            return "ok"
        return "\n".join(f"{v.subject}: {v.message}" for v in self.violations)


def validate_graph(g):
    out = set()

    def bad(code, subject, message):
        out.add(Violation(code, subject, message))

    seen = set()
    for a in g.actors:
        if a.id in seen:
            bad("duplicate-actor", a.id, f"duplicate actor id {a.id!r}")
        seen.add(a.id)
        _check_actor(a, bad)
    seen = set()
    for c in g.channels:
        if c.id in seen:
            bad("duplicate-channel", c.id, f"duplicate channel id {c.id!r}")
        seen.add(c.id)
        _check_channel(g, c, bad)
    known = {a.id for a in g.actors}
    if all(c.producer in known and c.consumer in known for c in g.channels):
        _check_routing(g, bad)
        _check_control(g, bad)
        _check_modes(g, bad)
    return ValidationReport(tuple(sorted(out)))


def _check_actor(a, bad):
    if a.bcet < 0 or a.wcet < a.bcet:
        bad("execution-time", a.id, "need 0 <= bcet <= wcet")
    if a.routing and (a.bcet or a.wcet):
        bad("routing-cost", a.id, "routing actors have zero execution time")
    if a.timed:
        if a.frequency is None or a.frequency <= 0:
            bad("frequency", a.id, "timed actor needs a positive frequency")
        elif not 0 <= a.phase < a.period:
            bad("phase", a.id, "phase must satisfy 0 <= phase < period")
    elif a.frequency is not None or a.phase:
        bad("frequency", a.id, "only timed actors carry frequency/phase")


def _check_channel(g, c, bad):
    known = {a.id for a in g.actors}
    for end in (c.producer, c.consumer):
        if end not in known:
            bad("unknown-actor", c.id, f"channel references unknown actor {end!r}")
    for side, r in (("prod", c.prod), ("cons", c.cons)):
        if isinstance(r, str):
            if g.mode_table and any(r not in dict(v) for _, v in g.mode_table.modes):
                bad("unbound-parameter", c.id, f"parameter {r!r} not set in every mode")
            if not g.mode_table:
                bad("unbound-parameter", c.id, f"parameter {r!r} has no mode table")
        elif r <= 0:
            bad("rate", c.id, f"{side} rate must be positive")
    if c.init < 0:
        bad("initial-tokens", c.id, "initial tokens must be nonnegative")
    if c.producer not in known or c.consumer not in known:
        return
    pk, ck = g.actor(c.producer).kind, g.actor(c.consumer).kind
    if isinstance(c.prod, str) and pk is not Kind.CONTROLLED_SPLITTER:
        bad("misplaced-parameter", c.id,
            "parametric production only on controlled splitter outputs")
    if isinstance(c.cons, str) and ck is not Kind.CONTROLLED_JOINER:
        bad("misplaced-parameter", c.id,
            "parametric consumption only on controlled joiner inputs")


def _check_routing(g, bad):
    for a in g.actors:
        ins = [c for c in g.inputs(a.id) if not c.control]
        outs = [c for c in g.outputs(a.id) if not c.control]
        if a.kind is Kind.SPLITTER:
            _check_dispatch(a, ins, outs, "prod", "cons", bad)
        elif a.kind is Kind.JOINER:
            _check_dispatch(a, outs, ins, "cons", "prod", bad)
        elif a.kind is Kind.DUPLICATER:
            if len(g.inputs(a.id)) != 1:
                bad("routing-shape", a.id, "duplicater needs exactly one input")


def _check_dispatch(a, single, many, many_side, single_side, bad):
    if len(single) != 1 or not many:
        bad("routing-shape", a.id, f"{a.kind.value} needs one port on one side")
        return
    if getattr(single[0], single_side) != 1:
        bad("routing-shape", a.id, f"{a.kind.value} moves one token per job")
    rates = [getattr(c, many_side) for c in many]
    if any(isinstance(r, str) for r in rates):
        bad("routing-shape", a.id, f"{a.kind.value} rates must be constant")
        return
    total = sum(r.numerator for r in rates)
    if sum(rates) != 1 or any(r != Fraction(r.numerator, total) for r in rates):
        bad("routing-shape", a.id,
            "dispatch rates must be numerator / (sum of numerators)")


def _check_control(g, bad):
    for a in g.actors:
        ctl_in = [c for c in g.inputs(a.id) if c.control]
        if a.kind in CONTROLLED:
            if len(ctl_in) != 1:
                bad("uncontrolled", a.id, "uncontrolled routing actor"
                    if not ctl_in else "more than one control input")
            elif controlling_decider(g, a.id) is None:
                bad("control-source", a.id, "control input does not come from a mode decider")
        if a.kind is Kind.MODE_DECIDER and not governed(g, a.id):
            bad("decider-unused", a.id, "mode decider governs no controlled routing actor")
    for c in g.channels:
        if not c.control:
            continue
        pk, ck = g.actor(c.producer).kind, g.actor(c.consumer).kind
        if pk not in (Kind.MODE_DECIDER, Kind.DUPLICATER):
            bad("control-source", c.id, "control channel must start at a mode decider")
        if pk is Kind.DUPLICATER and not any(x.control for x in g.inputs(c.producer)):
            bad("control-source", c.id, "control channel fed by a data duplicater")
        if ck not in CONTROLLED and ck is not Kind.DUPLICATER:
            bad("control-target", c.id, "control channel must end at a controlled routing actor")
        if c.prod != 1 or c.cons != 1:
            bad("control-rate", c.id, "control channels carry one token per job")

    for d in (a.id for a in g.actors if a.kind is Kind.MODE_DECIDER):
        gov = governed(g, d)
        if not gov:
            continue
        splitters = {x for x in gov if g.actor(x).kind is Kind.CONTROLLED_SPLITTER}
        joiners = gov - splitters
        if not splitters or not joiners:
            bad("area-pairing", d, "control area needs a controlled splitter and joiner")
        area = control_area(g, d)
        inside = area | gov
        for x in sorted(area):
            for c in g.inputs(x) + g.outputs(x):
                other = c.producer if c.consumer == x else c.consumer
                if other not in inside:
                    bad("branch-escape", x,
                        f"channel {c.id} leaves the control area of {d}")
        for s in sorted(splitters):
            for c in g.outputs(s):
                if c.control:
                    continue
                if not _reaches(g, c.consumer, joiners, gov):
                    bad("branch-unterminated", c.id,
                        f"branch from {s} never reaches a controlled joiner of {d}")


def _reaches(g, start, targets, stop):
    seen, todo = set(), deque([start])
    while todo:
        a = todo.popleft()
        if a in targets:
            return True
        if a in seen or a in stop:
            continue
        seen.add(a)
        todo.extend(c.consumer for c in g.outputs(a) if not c.control)
    return False


def _check_modes(g, bad):
    mt = g.mode_table
    if (g.parameters or any(a.kind is Kind.MODE_DECIDER for a in g.actors)) and not mt:
        bad("modes", "modes", "mode-dependent graph needs a nonempty mode table")
    for name, vals in mt.modes:
        for p, v in vals:
            if v not in (0, 1):
                bad("mode-value", name, f"{p}={v} is not 0 or 1")
    for a in g.actors:
        if a.kind is Kind.CONTROLLED_SPLITTER:
            ports = [c.prod for c in g.outputs(a.id) if not c.control]
        elif a.kind is Kind.CONTROLLED_JOINER:
            ports = [c.cons for c in g.inputs(a.id) if not c.control]
        else:
            continue
        for name, vals in mt.modes:
            vals = dict(vals)
            active = [r for r in ports
                      if (vals.get(r) if isinstance(r, str) else 1) == 1]
            if len(active) != 1:
                bad("not-one-hot", a.id,
                    f"mode {name} activates {len(active)} branches, expected 1")

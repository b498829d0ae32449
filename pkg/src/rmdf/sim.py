"""Discrete-event execution with physical, sequence-tagged tokens.

Time is exact (``Fraction`` ms). A job consumes its input tokens when it is
released and emits its output tokens when it ends; an actor has at most one
job in flight. Timed actors release job n no earlier than their n-th
activation, untimed actors as soon as their inputs suffice.

Conditional branches are driven by skip markers: a controlled splitter
sends a real token down the active branch and a skip marker down every
other one, and actors fed a skip run an instantaneous skip job that
forwards it. Job n of a branch actor therefore always handles frame n.

Rational rates become physical tokens through floors and ceilings of the
cumulative symbolic amounts. The integer part of an initial marking is
materialized as tag-0 tokens; the fractional remainder only advances the
consumer's entitlement.
"""

import json
import shlex
from dataclasses import dataclass, field, fields
from fractions import Fraction
from math import floor

from .arith import ceil_rat, rat_str
from .graph import Kind, rate_value, valuation
from .tokens import cumulative

SCHEDULERS = ("unlimited-cores", "single-core")
JOINER_POLICIES = ("rmdf-lexicographic", "naive-first-arrival")
EXEC_POLICIES = ("bcet", "wcet", "fixed")
MAX_INSTANT_FIRINGS = 100_000


@dataclass(frozen=True)
class SimConfig:
    horizon: Fraction
    scheduler: str = "unlimited-cores"
    priorities: tuple = ()              # ((actor, rank), ...); lower rank runs first
    joiner_policy: str = "rmdf-lexicographic"
    index_check: frozenset = frozenset()
    exec_time: str = "wcet"
    fixed_times: tuple = ()             # ((actor, duration), ...) for exec_time="fixed"
    overrides: tuple = ()               # ((actor, job, duration), ...)
    mode_script: tuple = ()             # ((decider, (mode, ...)), ...) cycled per job
    scope: tuple | None = None          # restrict to the induced subgraph

    def __post_init__(self):
        object.__setattr__(self, "horizon", Fraction(self.horizon))
        object.__setattr__(self, "index_check", frozenset(self.index_check))
        if self.horizon <= 0:
            raise ValueError("horizon must be positive")
        if self.scheduler not in SCHEDULERS:
            raise ValueError(f"unknown scheduler {self.scheduler!r}")
        if self.joiner_policy not in JOINER_POLICIES:
            raise ValueError(f"unknown joiner policy {self.joiner_policy!r}")
        if self.exec_time not in EXEC_POLICIES:
            raise ValueError(f"unknown execution-time policy {self.exec_time!r}")


# ---------------------------------------------------------------------------
# trace

@dataclass(frozen=True)
class JobStart:
    time: Fraction
    actor: str
    job: int
    skip: bool = False


@dataclass(frozen=True)
class JobPreempt:
    time: Fraction
    actor: str
    job: int


@dataclass(frozen=True)
class JobResume:
    time: Fraction
    actor: str
    job: int


@dataclass(frozen=True)
class JobEnd:
    time: Fraction
    actor: str
    job: int


@dataclass(frozen=True)
class JobTruncated:
    time: Fraction
    actor: str
    job: int


@dataclass(frozen=True)
class TokenEmit:
    time: Fraction
    channel: str
    token: int
    tag: int
    skip: bool = False


@dataclass(frozen=True)
class TokenConsume:
    time: Fraction
    actor: str
    job: int
    channel: str
    token: int
    tag: int


@dataclass(frozen=True)
class TokenDiscard:
    """An index-checking actor rejected a token whose tag is not newer than
    the last one it accepted (``after``); ``expected`` is the next tag it
    would have accepted in sequence."""
    time: Fraction
    actor: str
    job: int
    channel: str
    token: int
    expected: int
    got: int
    after: int


@dataclass(frozen=True)
class ModeChosen:
    time: Fraction
    decider: str
    job: int
    mode: str


EVENT_TYPES = {cls.__name__: cls for cls in
               (JobStart, JobPreempt, JobResume, JobEnd, JobTruncated,
                TokenEmit, TokenConsume, TokenDiscard, ModeChosen)}


@dataclass(frozen=True)
class SimTrace:
    events: tuple
    horizon: Fraction
    actors: tuple                       # declaration order of simulated actors
    residual: tuple = ()                # ((channel, (token, ...)), ...) left at horizon

    def of(self, kind):
        return [e for e in self.events if isinstance(e, kind)]

    @property
    def discards(self):
        return self.of(TokenDiscard)

    def intervals(self):
        """actor -> [(start, end, job, discarded)] executing intervals."""
        out = {a: [] for a in self.actors}
        open_, discarded = {}, {(d.actor, d.job) for d in self.discards}
        for e in self.events:
            if isinstance(e, (JobStart, JobResume)):
                open_[e.actor] = e.time
            elif isinstance(e, (JobPreempt, JobEnd, JobTruncated)) and e.actor in open_:
                start = open_.pop(e.actor)
                if e.time > start:
                    out[e.actor].append((start, e.time, e.job, (e.actor, e.job) in discarded))
        return out

    def records(self):
        return [event_record(e) for e in self.events]

    def to_json(self):
        return json.dumps({"horizon": rat_str(self.horizon), "actors": list(self.actors),
                           "events": self.records(),
                           "residual": {c: list(t) for c, t in self.residual}},
                          indent=1)

    def to_text(self):
        lines = [f"# horizon {rat_str(self.horizon)}",
                 "# actors " + " ".join(shlex.quote(a) for a in self.actors)]
        for e in self.events:
            parts = [rat_str(e.time), type(e).__name__]
            for f in fields(e)[1:]:
                parts.append(f"{f.name}={shlex.quote(_text_value(getattr(e, f.name)))}")
            lines.append(" ".join(parts))
        for c, toks in self.residual:
            lines.append(f"# residual {shlex.quote(c)} " + " ".join(map(str, toks)))
        return "\n".join(lines) + "\n"


def _text_value(v):
    if isinstance(v, bool):
        return "1" if v else "0"
    if isinstance(v, Fraction):
        return rat_str(v)
    return str(v)


def event_record(e):
    rec = {"event": type(e).__name__}
    for f in fields(e):
        v = getattr(e, f.name)
        rec[f.name] = rat_str(v) if isinstance(v, Fraction) else v
    return rec


def parse_trace(text):
    """Inverse of :meth:`SimTrace.to_text`."""
    horizon, actors, events, residual = None, (), [], []
    for lineno, line in enumerate(text.splitlines(), 1):
        if not line.strip():
            continue
        if line.startswith("#"):
            parts = shlex.split(line[1:])
            if parts[:1] == ["horizon"]:
                horizon = Fraction(parts[1])
            elif parts[:1] == ["actors"]:
                actors = tuple(parts[1:])
            elif parts[:1] == ["residual"]:
                residual.append((parts[1], tuple(int(t) for t in parts[2:])))
            continue
        try:
            parts = shlex.split(line)
            cls = EVENT_TYPES[parts[1]]
            values = dict(p.split("=", 1) for p in parts[2:])
            kwargs = {"time": Fraction(parts[0])}
            for f in fields(cls)[1:]:
                raw = values[f.name]
                kwargs[f.name] = (raw == "1" if f.type in (bool, "bool") else
                                  int(raw) if f.type in (int, "int") else raw)
            events.append(cls(**kwargs))
        except (IndexError, KeyError, ValueError) as exc:
            raise ValueError(f"line {lineno}: malformed trace event ({exc})") from None
    if horizon is None:
        horizon = max((e.time for e in events), default=Fraction(0))
    if not actors:
        actors = tuple(dict.fromkeys(e.actor for e in events if hasattr(e, "actor")))
    return SimTrace(tuple(events), horizon, actors, tuple(residual))


# ---------------------------------------------------------------------------
# engine

@dataclass
class _Token:
    id: int
    tag: int
    skip: bool
    arrival: Fraction
    mode: str | None = None


@dataclass
class _Job:
    actor: str
    n: int
    release: Fraction
    remaining: Fraction
    outputs: list = field(default_factory=list)     # (channel, tag, skip, mode)
    started: bool = False
    skip: bool = False


class _Engine:
    def __init__(self, g, cfg):
        if cfg.scope is not None:
            g = g.subgraph(cfg.scope)
        self.g, self.cfg = g, cfg
        self.prio = dict(cfg.priorities)
        self.order = {a: i for i, a in enumerate(g.ids)}
        if cfg.scheduler == "single-core":
            missing = [a.id for a in g.actors if not a.routing and a.id not in self.prio]
            if missing:
                raise ValueError(f"priority map incomplete: {missing}")
        known = set(g.ids)
        for a, *_ in cfg.overrides:
            if a not in known:
                raise ValueError(f"override names unknown actor {a!r}")
        self.overrides = {(a, int(n)): Fraction(d) for a, n, d in cfg.overrides}
        self.fixed = {a: Fraction(d) for a, d in cfg.fixed_times}
        self.script = {d: tuple(m) for d, m in cfg.mode_script}
        for d, modes in self.script.items():
            if d not in known or g.actor(d).kind is not Kind.MODE_DECIDER:
                raise ValueError(f"mode script names {d!r}, which is not a mode decider")
            for m in modes:
                valuation(g, m)
        self.events = []
        self.buffers = {c.id: [] for c in g.channels}
        self.next_token = 1
        self.next_job = {a: 1 for a in g.ids}
        self.active = {}                # actor -> _Job not yet ended
        self.last_tag = {}
        self.running = None             # single-core: job on the core
        self.t = Fraction(0)
        for c in g.channels:
            for _ in range(floor(c.init)):
                self._emit(c.id, 0, False, None)

    # token bookkeeping -------------------------------------------------

    def _emit(self, channel, tag, skip, mode):
        tok = _Token(self.next_token, tag, skip, self.t, mode)
        self.next_token += 1
        self.buffers[channel].append(tok)
        self.events.append(TokenEmit(self.t, channel, tok.id, tag, skip))

    def _entitled(self, c, n):
        """Physical tokens consumer job n takes from c (fixed-rate ports)."""
        frac = c.init - floor(c.init)
        def owed(k):
            return max(0, ceil_rat(cumulative(self.g, c, "cons", k) - frac))
        return owed(n) - owed(n - 1)

    def _produced(self, c, n):
        return floor(cumulative(self.g, c, "prod", n)) - floor(cumulative(self.g, c, "prod", n - 1))

    # firing rules --------------------------------------------------------

    def _plan(self, a):
        """Tokens job ``next_job[a]`` would take: list of (channel, count),
        or None if not enabled. Also returns a handler for the outputs."""
        actor, g = self.g.actor(a), self.g
        kind = actor.kind
        if kind is Kind.CONTROLLED_JOINER:
            return self._plan_joiner(a)
        n = self.next_job[a]
        take = []
        for c in g.inputs(a):
            need = 1 if kind is Kind.CONTROLLED_SPLITTER else self._entitled(c, n)
            if need > len(self.buffers[c.id]):
                return None
            if need:
                take.append((c.id, need))
        return take

    def _plan_joiner(self, a):
        ins = self.g.inputs(a)
        data = [c for c in ins if not c.control]
        if self.cfg.joiner_policy == "rmdf-lexicographic":
            if all(self.buffers[c.id] for c in ins):
                return [(c.id, 1) for c in ins]
            return None
        ready = [c for c in data if self.buffers[c.id]]
        if not ready:
            return None
        first = min(ready, key=lambda c: (self.buffers[c.id][0].arrival,
                                          self.buffers[c.id][0].id))
        return [(first.id, 1)]

    def _release(self, a, take):
        g, n = self.g, self.next_job[a]
        actor = g.actor(a)
        taken = {}
        for cid, count in take:
            taken[cid] = [self.buffers[cid].pop(0) for _ in range(count)]
        data_tokens = [tok for c in g.inputs(a) if not c.control and not c.self_loop
                       for tok in taken.get(c.id, ())]
        skip = any(tok.skip for tok in data_tokens)
        tag = data_tokens[0].tag if data_tokens else n
        mode = next((tok.mode for toks in taken.values() for tok in toks if tok.mode), None)

        job = _Job(a, n, self.t, Fraction(0), skip=skip)
        discard = None
        if a in self.cfg.index_check and data_tokens and not skip:
            last = self.last_tag.get(a, 0)
            if tag <= last:
                discard = (last, tag)
            else:
                self.last_tag[a] = tag
        for cid, toks in taken.items():
            for tok in toks:
                if discard and not tok.skip and tok.tag == discard[1] \
                        and not g.channel(cid).self_loop and not g.channel(cid).control:
                    last = discard[0]
                    self.events.append(TokenDiscard(self.t, a, n, cid, tok.id,
                                                    last + 1, tok.tag, last))
                    discard = None
                else:
                    self.events.append(TokenConsume(self.t, a, n, cid, tok.id, tok.tag))

        outs = g.outputs(a)
        if actor.kind is Kind.MODE_DECIDER and not skip:
            mode = self._choose_mode(a, n)
        if actor.kind is Kind.CONTROLLED_SPLITTER:
            vals = valuation(g, mode) if mode else {}
            for c in outs:
                off = skip or not rate_value(c.prod, vals)
                job.outputs.append((c.id, tag, off, None))
        elif actor.kind is Kind.CONTROLLED_JOINER:
            job.outputs.extend(self._joiner_outputs(a, taken, mode))
        else:
            for c in outs:
                for _ in range(self._produced(c, n)):
                    job.outputs.append((c.id, tag, skip and not c.self_loop,
                                        mode if c.control or actor.kind is Kind.DUPLICATER
                                        else None))
        job.remaining = Fraction(0) if skip else self._duration(actor, n)
        self.next_job[a] = n + 1
        self.active[a] = job
        return job

    def _joiner_outputs(self, a, taken, mode):
        ins = {c.id: c for c in self.g.inputs(a)}
        if self.cfg.joiner_policy == "rmdf-lexicographic":
            vals = valuation(self.g, mode) if mode else {}
            chosen = [tok for cid, toks in sorted(taken.items()) for tok in toks
                      if not ins[cid].control and rate_value(ins[cid].cons, vals)]
        else:
            chosen = [tok for toks in taken.values() for tok in toks]
        outs = []
        for tok in chosen:
            if tok.skip and self.cfg.joiner_policy == "naive-first-arrival":
                continue
            outs += [(c.id, tok.tag, tok.skip, None) for c in self.g.outputs(a)]
        return outs

    def _choose_mode(self, a, n):
        modes = self.script.get(a) or tuple(self.g.mode_table.names[:1])
        if not modes:
            return None
        mode = modes[(n - 1) % len(modes)]
        self.events.append(ModeChosen(self.t, a, n, mode))
        return mode

    def _duration(self, actor, n):
        if actor.routing:
            return Fraction(0)
        if (actor.id, n) in self.overrides:
            return self.overrides[(actor.id, n)]
        policy = self.cfg.exec_time
        if policy == "fixed" and actor.id in self.fixed:
            return self.fixed[actor.id]
        return actor.bcet if policy == "bcet" else actor.wcet

    def _finish(self, job):
        self.events.append(JobEnd(self.t, job.actor, job.n))
        for cid, tag, skip, mode in job.outputs:
            self._emit(cid, tag, skip, mode)
        del self.active[job.actor]
        if self.running is job:
            self.running = None

    # main loop -----------------------------------------------------------

    def _settle(self):
        """Release every enabled job at the current instant; run the
        zero-length ones to completion immediately."""
        fired = 0
        progress = True
        while progress:
            progress = False
            for a in self.g.ids:
                if a in self.active:
                    continue
                actor = self.g.actor(a)
                if actor.timed and actor.activation(self.next_job[a]) > self.t:
                    continue
                take = self._plan(a)
                if take is None:
                    continue
                job = self._release(a, take)
                fired += 1
                if fired > MAX_INSTANT_FIRINGS:
                    raise RuntimeError(f"unbounded zero-time firing at t={self.t}")
                if job.remaining == 0:
                    self.events.append(JobStart(self.t, a, job.n, job.skip))
                    self._finish(job)
                progress = True

    def _dispatch(self):
        ready = [j for j in self.active.values() if j.remaining > 0]
        if self.cfg.scheduler == "unlimited-cores":
            for j in sorted(ready, key=lambda j: self.order[j.actor]):
                if not j.started:
                    j.started = True
                    self.events.append(JobStart(self.t, j.actor, j.n, j.skip))
            return ready
        if not ready:
            return []
        best = min(ready, key=lambda j: (self.prio[j.actor], self.order[j.actor]))
        if self.running is not best:
            if self.running is not None:
                self.events.append(JobPreempt(self.t, self.running.actor, self.running.n))
            if best.started:
                self.events.append(JobResume(self.t, best.actor, best.n))
            else:
                self.events.append(JobStart(self.t, best.actor, best.n))
            best.started = True
            self.running = best
        return [best]

    def _next_activation(self):
        times = [self.g.actor(a).activation(self.next_job[a])
                 for a in self.g.ids if self.g.actor(a).timed and a not in self.active]
        later = [t for t in times if t > self.t]
        return min(later, default=None)

    def run(self):
        horizon = self.cfg.horizon
        while True:
            self._settle()
            executing = self._dispatch()
            candidates = [self.t + j.remaining for j in executing]
            nxt = self._next_activation()
            if nxt is not None:
                candidates.append(nxt)
            if not candidates:
                break
            step_to = min(candidates)
            if step_to > horizon:
                for j in executing:
                    j.remaining -= horizon - self.t
                self.t = horizon
                break
            for j in executing:
                j.remaining -= step_to - self.t
            self.t = step_to
            for j in sorted(executing, key=lambda j: self.order[j.actor]):
                if j.remaining == 0:
                    self._finish(j)
        for j in sorted(self.active.values(), key=lambda j: self.order[j.actor]):
            if j.started:
                self.events.append(JobTruncated(self.t, j.actor, j.n))
        residual = tuple((cid, tuple(t.id for t in toks))
                         for cid, toks in self.buffers.items() if toks)
        return SimTrace(tuple(self.events), horizon, tuple(self.g.ids), residual)


def simulate(g, cfg):
    """Run ``g`` under ``cfg`` until ``cfg.horizon`` and return the trace."""
    return _Engine(g, cfg).run()


def conservation_errors(trace):
    """Tokens emitted but neither consumed, discarded nor left buffered,
    or accounted for more than once."""
    emitted = [e.token for e in trace.of(TokenEmit)]
    used = [e.token for e in trace.events if isinstance(e, (TokenConsume, TokenDiscard))]
    used += [t for _, toks in trace.residual for t in toks]
    errors = []
    if len(set(emitted)) != len(emitted):
        errors.append("token emitted twice")
    if sorted(used) != sorted(emitted):
        errors.append("emitted and accounted tokens differ")
    return errors


def overlaps(trace):
    """Pairs of executing intervals that intersect (single-core check)."""
    spans = sorted((s, e, a) for a, ivs in trace.intervals().items() for s, e, *_ in ivs)
    return [(x, y) for x, y in zip(spans, spans[1:]) if y[0] < x[1]]


__all__ = ["SimConfig", "SimTrace", "simulate", "parse_trace", "conservation_errors",
           "overlaps", "event_record"] + list(EVENT_TYPES)


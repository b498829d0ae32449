"""Per-job release/deadline windows and the necessary WCET feasibility test.

Releases propagate forward from the timed actors' activations, assuming
every producer job finishes at its release plus BCET. Deadlines propagate
backward: a producer job must finish before the earliest consumer job that
needs its tokens starts its worst case, and a timed actor's job must also
finish by its next activation. Conditional branches are all assumed to run
in every iteration, which is the worst case for both passes.

Necessary condition only: a passing feasibility report does not certify
that any scheduler meets every window.
"""

import csv
import io
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import floor

from .analysis import compute_hyperperiod
from .arith import decimal_str, rat_json, rat_str
from .graph import ALL_BRANCHES, valuation
from .tokens import cumulative, job_amount, jobs_to_reach

MARGIN_CYCLES = 2       # extra hyperperiods simulated past the horizon for deadlines


@dataclass(frozen=True)
class JobTiming:
    actor: str
    n: int
    release: Fraction
    deadline: Fraction | None       # None: nothing downstream constrains the job

    @property
    def window(self):
        return None if self.deadline is None else self.deadline - self.release

    @property
    def infeasible(self):
        return self.deadline is not None and self.deadline < self.release

    def record(self):
        return {"actor": self.actor, "n": self.n,
                "release": rat_json(self.release),
                "deadline": rat_json(self.deadline),
                "window": rat_json(self.window)}


class TimingSolver:
    """Memoized forward/backward propagation over a fixed job horizon."""

    def __init__(self, g, cycles=1):
        self.g = g
        hp = compute_hyperperiod(g)
        if not hp.consistent:
            raise ValueError(f"timing analysis needs a consistent graph: {hp}")
        self.hyperperiod = hp.length
        self.jobs = hp.jobs.counts
        self.cycles = cycles
        self.limit = {a: r * (cycles + MARGIN_CYCLES) for a, r in self.jobs.items()}
        self.values = valuation(g, ALL_BRANCHES)
        self._check_anchored()
        self._release, self._deadline = {}, {}
        self._fdeps, self._bdeps = {}, {}

    def _check_anchored(self):
        g = self.g
        reach = {a.id for a in g.timed_actors}
        todo = list(reach)
        while todo:
            a = todo.pop()
            for c in g.outputs(a):
                if c.consumer not in reach:
                    reach.add(c.consumer)
                    todo.append(c.consumer)
        loose = [a for a in g.ids if a not in reach]
        if loose:
            raise ValueError(f"unanchored actors (no timed ancestor): {loose}")

    # forward -------------------------------------------------------------

    def _forward_deps(self, key):
        if key in self._fdeps:
            return self._fdeps[key]
        a, n = key
        deps = []
        for c in self.g.inputs(a):
            if not job_amount(self.g, c, "cons", n, self.values):
                continue
            need = cumulative(self.g, c, "cons", n, self.values) - c.init
            k = jobs_to_reach(self.g, c, "prod", need, self.values)
            if k is None:
                raise ValueError(f"{a} job {n} can never get enough tokens on {c.id}")
            if k >= 1:
                deps.append((c.producer, k))
        self._fdeps[key] = deps
        return deps

    def _release_of(self, key, deps):
        a, n = key
        actor = self.g.actor(a)
        ready = [self._release[d] + self.g.actor(d[0]).bcet for d in deps]
        if actor.timed:
            ready.append(actor.activation(n))
        return max(ready, default=Fraction(0))

    def release(self, a, n):
        return _solve(self._release, (a, n), self._forward_deps, self._release_of)

    # backward ------------------------------------------------------------

    def _backward_deps(self, key):
        if key in self._bdeps:
            return self._bdeps[key]
        p, k = key
        deps = []
        for c in self.g.outputs(p):
            if not job_amount(self.g, c, "prod", k, self.values):
                continue
            before = c.init + cumulative(self.g, c, "prod", k - 1, self.values)
            n = _first_job_exceeding(self.g, c, before, self.values)
            if n is not None and n <= self.limit[c.consumer]:
                deps.append((c.consumer, n))
        self._bdeps[key] = deps
        return deps

    def _deadline_of(self, key, deps):
        p, k = key
        actor = self.g.actor(p)
        bounds = [self._deadline[d] - self.g.actor(d[0]).wcet
                  for d in deps if self._deadline[d] is not None]
        if actor.timed:
            bounds.append(actor.activation(k) + actor.period)
        return min(bounds, default=None)

    def deadline(self, a, n):
        return _solve(self._deadline, (a, n), self._backward_deps, self._deadline_of)

    def timing(self, a, n):
        if n < 1:
            raise ValueError("job index starts at 1")
        if n > self.jobs[a] * self.cycles:
            raise ValueError(f"job {n} of {a} is past the analysed horizon")
        return JobTiming(a, n, self.release(a, n), self.deadline(a, n))


def _first_job_exceeding(g, c, amount, values):
    """Smallest consumer job n whose cumulative demand on c exceeds amount."""
    rate = job_amount(g, c, "cons", 1, values)
    if g.actor(c.consumer).kind.value == "joiner":
        return jobs_to_reach(g, c, "cons", floor(amount) + 1, values)
    if rate <= 0:
        return None
    return floor(amount / rate) + 1


def _solve(memo, key, deps_of, combine):
    """Evaluate ``memo[key]`` over a dependency DAG without recursion."""
    if key in memo:
        return memo[key]
    path = set()                    # nodes whose dependencies are being evaluated
    stack = [(key, False)]
    while stack:
        k, expanded = stack.pop()
        if k in memo:
            continue
        deps = deps_of(k)
        if expanded:
            memo[k] = combine(k, deps)
            path.discard(k)
            continue
        path.add(k)
        stack.append((k, True))
        for d in dict.fromkeys(deps):
            if d in path:
                raise ValueError(f"zero-delay dependency cycle through {d}")
            if d not in memo:
                stack.append((d, False))
    return memo[key]


@lru_cache(maxsize=16)
def _solver(g, cycles):
    return TimingSolver(g, cycles)


def job_timing(g, actor, n):
    g.actor(actor)
    hp_jobs = compute_hyperperiod(g).jobs[actor]
    cycles = max(1, -(-n // hp_jobs))
    return _solver(g, cycles).timing(actor, n)


def timing_table(g, horizon="hyperperiod"):
    """JobTimings for every actor over one hyperperiod, ``horizon`` jobs per
    actor (int), or a per-actor mapping of job counts."""
    base = compute_hyperperiod(g).jobs.counts
    if horizon == "hyperperiod":
        counts = dict(base)
    elif isinstance(horizon, int):
        counts = {a: horizon for a in g.ids}
    else:
        counts = {a: horizon.get(a, 0) for a in g.ids}
    cycles = max([1] + [-(-counts[a] // base[a]) for a in g.ids if base[a]])
    solver = _solver(g, cycles)
    return [solver.timing(a, n) for a in g.ids for n in range(1, counts[a] + 1)]


def table_csv(rows):
    out = io.StringIO()
    w = csv.writer(out, lineterminator="\n")
    w.writerow(["actor", "n", "release", "release_ms", "deadline", "deadline_ms",
                "window", "window_ms"])
    for r in rows:
        w.writerow([r.actor, r.n,
                    rat_str(r.release), decimal_str(r.release),
                    "" if r.deadline is None else rat_str(r.deadline), decimal_str(r.deadline),
                    "" if r.window is None else rat_str(r.window), decimal_str(r.window)])
    return out.getvalue()


# ---------------------------------------------------------------------------
# feasibility

@dataclass(frozen=True)
class ActorFeasibility:
    actor: str
    min_window: Fraction | None     # largest admissible WCET; None = unconstrained
    wcet: Fraction
    passed: bool


@dataclass(frozen=True)
class FeasibilityReport:
    actors: tuple

    @property
    def passed(self):
        return all(a.passed for a in self.actors)

    @property
    def failures(self):
        return [a.actor for a in self.actors if not a.passed]

    def max_wcet(self, actor):
        return next(a.min_window for a in self.actors if a.actor == actor)

    def __str__(self):
        lines = []
        for a in self.actors:
            limit = "unbounded" if a.min_window is None else \
                f"{rat_str(a.min_window)} (~{decimal_str(a.min_window)} ms)"
            lines.append(f"{'ok  ' if a.passed else 'FAIL'} {a.actor}: wcet "
                         f"{rat_str(a.wcet)} <= {limit}")
        lines.append("feasible (necessary condition)" if self.passed else
                     f"infeasible: {', '.join(self.failures)}")
        return "\n".join(lines)

    def record(self):
        return {"passed": self.passed,
                "actors": [{"actor": a.actor, "max_wcet": rat_json(a.min_window),
                            "wcet": rat_json(a.wcet), "passed": a.passed}
                           for a in self.actors]}


def max_wcets(g):
    """Per actor, the minimum execution window over one hyperperiod: the
    largest WCET compatible with the necessary feasibility condition."""
    rows = timing_table(g)
    out = {}
    for a in g.ids:
        windows = [r.window for r in rows if r.actor == a and r.window is not None]
        out[a] = min(windows, default=None)
    return out


def check_feasibility(g):
    limits = max_wcets(g)
    entries = []
    for a in g.actors:
        limit = limits[a.id]
        entries.append(ActorFeasibility(a.id, limit, a.wcet,
                                        limit is None or a.wcet <= limit))
    return FeasibilityReport(tuple(entries))


def periodicity_violations(g, cycles=2):
    """Jobs breaking release(n + R) = release(n) + H (or the same for
    deadlines) over ``cycles`` hyperperiods."""
    solver = _solver(g, cycles)
    hyper = solver.hyperperiod
    bad = []
    for a, r in solver.jobs.items():
        for n in range(1, r * (cycles - 1) + 1):
            x, y = solver.timing(a, n), solver.timing(a, n + r)
            if y.release != x.release + hyper:
                bad.append((a, n, "release"))
            if (x.deadline is None) != (y.deadline is None) or \
                    (x.deadline is not None and y.deadline != x.deadline + hyper):
                bad.append((a, n, "deadline"))
    return bad

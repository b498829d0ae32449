"""Per-job and cumulative token amounts on channel ports.

Splitters and joiners move one token per job, visiting their ports in
lexicographic channel order; every other actor moves its (instantiated)
rate on every port at every job.
"""

from fractions import Fraction

from .arith import ceil_rat
from .graph import Kind, dispatch_pattern, rate_value


def _pattern_side(g, channel, side):
    """Owning routing actor if this port follows a dispatch pattern."""
    owner = channel.producer if side == "prod" else channel.consumer
    kind = g.actor(owner).kind
    if (side == "prod" and kind is Kind.SPLITTER) or (side == "cons" and kind is Kind.JOINER):
        return owner
    return None


def job_amount(g, channel, side, n, values=None):
    """Tokens moved on ``channel`` by job ``n`` of its producer (``side="prod"``)
    or consumer (``side="cons"``)."""
    owner = _pattern_side(g, channel, side)
    if owner is not None:
        pattern = _pattern(g, owner)
        return Fraction(1 if pattern[(n - 1) % len(pattern)] == channel.id else 0)
    return rate_value(getattr(channel, side), values or {})


def _pattern(g, owner):
    cache = g.pattern_cache
    if owner not in cache:
        cache[owner] = dispatch_pattern(g, owner)
    return cache[owner]


def cumulative(g, channel, side, k, values=None):
    """Total moved by jobs 1..k under a fixed valuation."""
    if k <= 0:
        return Fraction(0)
    owner = _pattern_side(g, channel, side)
    if owner is None:
        return rate_value(getattr(channel, side), values or {}) * k
    pattern = _pattern(g, owner)
    q, r = divmod(k, len(pattern))
    return Fraction(q * pattern.count(channel.id) + pattern[:r].count(channel.id))


def jobs_to_reach(g, channel, side, amount, values=None):
    """Smallest k >= 0 with cumulative(k) >= amount; ``None`` if never."""
    if amount <= 0:
        return 0
    owner = _pattern_side(g, channel, side)
    if owner is None:
        rate = rate_value(getattr(channel, side), values or {})
        if rate <= 0:
            return None
        return ceil_rat(amount / rate)
    pattern = _pattern(g, owner)
    per_cycle = pattern.count(channel.id)
    if not per_cycle:
        return None
    m = ceil_rat(amount)                 # whole tokens needed
    q, r = divmod(m - 1, per_cycle)
    positions = [i for i, cid in enumerate(pattern) if cid == channel.id]
    return q * len(pattern) + positions[r] + 1

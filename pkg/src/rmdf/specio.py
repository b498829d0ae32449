"""Reader/writer for the sectioned ``.rmdf`` text format.

    rmdf 1
    [defaults]
    bcet 3/25
    wcet 1/5
    [actors]
    Camera timed freq 30Hz phase 0ms
    "Feature Detection" usual
    [channels]
    c6 "Feature Match" -> "Navigation Filter" prod 1 cons 3/50 init 1/50
    [modes]
    base: m1=0 m2=1

Lines starting with ``actor`` or ``channel`` are accepted in any section.
"""

import re
from fractions import Fraction
from importlib import resources

from .arith import parse_rational, rat_str
from .graph import (DEFAULT_BCET, DEFAULT_WCET, ROUTING, Actor, Channel,
                    Graph, Kind, ModeTable)

FORMAT_VERSION = 1

_TOKEN = re.compile(r'"([^"\n]*)"|([^\s"#]+)|(#.*)|(")')
_PLAIN = re.compile(r"[A-Za-z0-9_.+\-]+\Z")
_PARAM = re.compile(r"[A-Za-z_][A-Za-z0-9_]*\Z")
_KEYWORDS = {"->", "prod", "cons", "init", "control", "actor", "channel",
             "freq", "frequency", "phase", "bcet", "wcet"}

_KIND_ALIASES = {k.value: k for k in Kind}
_KIND_ALIASES.update({k.value.replace("_", "-"): k for k in Kind})
_KIND_ALIASES.update({"decider": Kind.MODE_DECIDER, "duplicator": Kind.DUPLICATER})


class ParseError(ValueError):
    def __init__(self, message, line=None, column=None):
        self.message, self.line, self.column = message, line, column
        where = f"line {line}" + (f", column {column}" if column else "") if line else ""
        super().__init__(f"{where}: {message}" if where else message)


class _Tok(str):
    """A token remembering its 1-based column."""

    def __new__(cls, text, col, quoted=False):
        t = super().__new__(cls, text)
        t.col, t.quoted = col, quoted
        return t


def _tokens(line, lineno):
    out = []
    for m in _TOKEN.finditer(line):
        if m.group(3) is not None:
            break
        if m.group(4) is not None:
            raise ParseError("unterminated quote", lineno, m.start() + 1)
        if m.group(1) is not None:
            out.append(_Tok(m.group(1), m.start() + 1, quoted=True))
        else:
            out.append(_Tok(m.group(2), m.start() + 1))
    return out


def _rational(tok, lineno, unit=None):
    text = str(tok)
    if unit and text.lower().endswith(unit.lower()):
        text = text[:-len(unit)]
    try:
        return parse_rational(text)
    except ValueError:
        raise ParseError(f"malformed rational literal {str(tok)!r}", lineno, tok.col) from None


class _Parser:
    def __init__(self):
        self.defaults = {"bcet": DEFAULT_BCET, "wcet": DEFAULT_WCET}
        self.actors, self.channels, self.modes = [], [], []
        self.actor_lines, self.channel_lines = {}, {}

    def feed(self, text):
        section = None
        seen_content = False
        for lineno, line in enumerate(text.splitlines(), 1):
            toks = _tokens(line, lineno)
            if not toks:
                continue
            head = toks[0]
            if not head.quoted and head.startswith("["):
                if not head.endswith("]") or len(toks) != 1:
                    raise ParseError(f"bad section header {line.strip()!r}", lineno, head.col)
                section = head[1:-1].strip().lower()
                if section not in ("defaults", "actors", "channels", "modes"):
                    raise ParseError(f"unknown section [{section}]", lineno, head.col)
                seen_content = True
                continue
            if not head.quoted and head == "rmdf" and not seen_content:
                if len(toks) != 2 or toks[1] != str(FORMAT_VERSION):
                    raise ParseError("unsupported format version (only 1)", lineno, head.col)
                seen_content = True
                continue
            seen_content = True
            if not head.quoted and head == "actor" and len(toks) > 2:
                self.actor(toks[1:], lineno)
            elif not head.quoted and head == "channel" and len(toks) > 2:
                self.channel(toks[1:], lineno)
            elif section == "actors":
                self.actor(toks, lineno)
            elif section == "channels":
                self.channel(toks, lineno)
            elif section == "modes":
                self.mode(toks, lineno)
            elif section == "defaults":
                self.default(toks, lineno)
            else:
                raise ParseError(f"declaration outside any section: {str(head)!r}", lineno, head.col)

    def default(self, toks, lineno):
        if len(toks) != 2 or toks[0] not in self.defaults:
            raise ParseError("expected 'bcet <rat>' or 'wcet <rat>'", lineno, toks[0].col)
        self.defaults[str(toks[0])] = _rational(toks[1], lineno, "ms")

    def actor(self, toks, lineno):
        if len(toks) < 2:
            raise ParseError("actor needs a name and a kind", lineno, toks[0].col)
        name, kind_tok = toks[0], toks[1]
        kind = _KIND_ALIASES.get(kind_tok.lower())
        if kind is None:
            raise ParseError(f"unknown actor kind {str(kind_tok)!r}", lineno, kind_tok.col)
        zero = kind in ROUTING
        opts = {"bcet": Fraction(0) if zero else self.defaults["bcet"],
                "wcet": Fraction(0) if zero else self.defaults["wcet"],
                "freq": None, "phase": Fraction(0)}
        units = {"freq": "Hz", "phase": "ms", "bcet": "ms", "wcet": "ms"}
        i = 2
        while i < len(toks):
            key = toks[i].lower()
            if key == "frequency":
                key = "freq"
            if key in units:
                if i + 1 >= len(toks):
                    raise ParseError(f"missing value after {key}", lineno, toks[i].col)
                opts[key] = _rational(toks[i + 1], lineno, units[key])
                i += 2
            elif kind is Kind.TIMED and key.endswith("hz") and opts["freq"] is None:
                opts["freq"] = _rational(toks[i], lineno, "Hz")
                i += 1
            else:
                raise ParseError(f"unexpected token {str(toks[i])!r}", lineno, toks[i].col)
            if i < len(toks) and toks[i].lower() in ("hz", "ms"):
                i += 1
        if kind is Kind.TIMED and opts["freq"] is None:
            raise ParseError("timed actor needs a frequency", lineno, kind_tok.col)
        if kind is not Kind.TIMED and (opts["freq"] is not None or opts["phase"]):
            raise ParseError("only timed actors take freq/phase", lineno, kind_tok.col)
        if str(name) in self.actor_lines:
            raise ParseError(f"duplicate actor {str(name)!r}", lineno, name.col)
        self.actor_lines[str(name)] = lineno
        self.actors.append(Actor(str(name), kind, opts["bcet"], opts["wcet"],
                                 opts["freq"], opts["phase"]))

    def channel(self, toks, lineno):
        if len(toks) < 4 or toks[2] != "->":
            raise ParseError("expected 'id producer -> consumer ...'", lineno, toks[0].col)
        cid, prod_actor, cons_actor = toks[0], toks[1], toks[3]
        fields = {"prod": Fraction(1), "cons": Fraction(1), "init": Fraction(0)}
        control = False
        i = 4
        while i < len(toks):
            key = toks[i].lower()
            if key == "control":
                control = True
                i += 1
            elif key in fields:
                if i + 1 >= len(toks):
                    raise ParseError(f"missing value after {key}", lineno, toks[i].col)
                val = toks[i + 1]
                if key != "init" and not val.quoted and _PARAM.match(val):
                    fields[key] = str(val)
                else:
                    fields[key] = _rational(val, lineno)
                i += 2
            else:
                raise ParseError(f"unexpected token {str(toks[i])!r}", lineno, toks[i].col)
        if str(cid) in self.channel_lines:
            raise ParseError(f"duplicate channel {str(cid)!r}", lineno, cid.col)
        self.channel_lines[str(cid)] = (lineno, prod_actor, cons_actor)
        self.channels.append(Channel(str(cid), str(prod_actor), str(cons_actor),
                                     fields["prod"], fields["cons"], fields["init"], control))

    def mode(self, toks, lineno):
        name = toks[0]
        rest = toks[1:]
        if name.endswith(":") and not name.quoted:
            name = _Tok(name[:-1], name.col)
        elif rest and rest[0] == ":":
            rest = rest[1:]
        elif rest and rest[0].startswith(":"):
            rest = [_Tok(rest[0][1:], rest[0].col + 1)] + rest[1:] if len(rest[0]) > 1 else rest[1:]
        else:
            raise ParseError("expected 'mode: p=v ...'", lineno, toks[0].col)
        if not name:
            raise ParseError("empty mode name", lineno, toks[0].col)
        vals = {}
        for t in rest:
            p, eq, v = t.partition("=")
            if not eq or not _PARAM.match(p) or v not in ("0", "1"):
                raise ParseError(f"expected 'param=0' or 'param=1', got {str(t)!r}", lineno, t.col)
            vals[p] = int(v)
        if any(m == str(name) for m, _ in self.modes):
            raise ParseError(f"duplicate mode {str(name)!r}", lineno, toks[0].col)
        self.modes.append((str(name), tuple(vals.items())))

    def finish(self):
        known = set(self.actor_lines)
        for c in self.channels:
            lineno, p, q = self.channel_lines[c.id]
            for tok in (p, q):
                if str(tok) not in known:
                    raise ParseError(f"unknown actor {str(tok)!r} in channel {c.id}", lineno, tok.col)
        table = ModeTable(tuple(self.modes))
        for c in self.channels:
            for r in (c.prod, c.cons):
                if isinstance(r, str) and (not self.modes or
                                           any(r not in dict(v) for _, v in self.modes)):
                    raise ParseError(f"unbound mode parameter {r!r} in channel {c.id}",
                                     self.channel_lines[c.id][0])
        return Graph(tuple(self.actors), tuple(self.channels), table)


def parse_spec(text):
    """Parse ``.rmdf`` text (str or UTF-8 bytes) into a :class:`Graph`."""
    if isinstance(text, (bytes, bytearray)):
        try:
            text = bytes(text).decode("utf-8")
        except UnicodeDecodeError as exc:
            raise ParseError(f"input is not UTF-8 ({exc.reason})") from None
    p = _Parser()
    p.feed(text)
    return p.finish()


def read_spec(path):
    with open(path, "rb") as fh:
        return parse_spec(fh.read())


def quote(name):
    if "\n" in name or '"' in name:
        raise ValueError(f"name {name!r} cannot be serialized")
    if _PLAIN.match(name) and name not in _KEYWORDS and not name.startswith("["):
        return name
    return f'"{name}"'


def _rate(r):
    return r if isinstance(r, str) else rat_str(r)


def serialize_spec(g):
    lines = [f"rmdf {FORMAT_VERSION}", "", "[actors]"]
    for a in g.actors:
        parts = [quote(a.id), a.kind.value]
        if a.timed:
            parts += ["freq", rat_str(a.frequency) + "Hz", "phase", rat_str(a.phase) + "ms"]
        parts += ["bcet", rat_str(a.bcet), "wcet", rat_str(a.wcet)]
        lines.append(" ".join(parts))
    lines += ["", "[channels]"]
    for c in g.channels:
        parts = [quote(c.id), quote(c.producer), "->", quote(c.consumer),
                 "prod", _rate(c.prod), "cons", _rate(c.cons), "init", rat_str(c.init)]
        if c.control:
            parts.append("control")
        lines.append(" ".join(parts))
    if g.mode_table:
        lines += ["", "[modes]"]
        for name, vals in g.mode_table.modes:
            lines.append(" ".join([quote(name) + ":"] + [f"{p}={v}" for p, v in vals]))
    return "\n".join(lines) + "\n"


MODELS = ("ingenuity", "fig1-example")


def model_path(name):
    """Filesystem path of a bundled model or scenario file."""
    ref = resources.files("rmdf") / "models" / name
    return str(ref)


def load_model(name):
    """Bundled graph: ``"ingenuity"`` or ``"fig1-example"``."""
    return parse_spec((resources.files("rmdf") / "models" / f"{name}.rmdf").read_bytes())

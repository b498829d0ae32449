"""Reader/writer for ``.scn`` simulation scenarios.

    rmdf-scenario 1
    [scenario]
    scheduler single-core
    joiner naive-first-arrival
    exec wcet
    horizon 140
    index-check "Feature Match"
    scope Camera "Feature Detection" ...
    [priorities]
    "Feature Detection" 1
    [overrides]
    "Filtering Procedure" 2 34
    [times]
    Camera 1/4
    [modes]
    "Label Decider": base search
"""

from importlib import resources

from .sim import SimConfig
from .specio import ParseError, _rational, _tokens, quote
from .arith import rat_str

_SECTIONS = ("scenario", "priorities", "overrides", "times", "modes")
_JOINER_ALIASES = {"naive": "naive-first-arrival", "rmdf": "rmdf-lexicographic",
                   "lexicographic": "rmdf-lexicographic"}
_SCHED_ALIASES = {"unlimited": "unlimited-cores",
                  "single-core-preemptive-fixed-priority": "single-core"}


def parse_scenario(text):
    if isinstance(text, (bytes, bytearray)):
        text = bytes(text).decode("utf-8")
    opts = {"index_check": set(), "priorities": [], "overrides": [],
            "fixed_times": [], "mode_script": []}
    section, seen = None, False
    for lineno, line in enumerate(text.splitlines(), 1):
        toks = _tokens(line, lineno)
        if not toks:
            continue
        head = toks[0]
        if not head.quoted and head.startswith("["):
            name = head.strip("[]").lower()
            if not head.endswith("]") or len(toks) != 1 or name not in _SECTIONS:
                raise ParseError(f"bad section header {line.strip()!r}", lineno, head.col)
            section, seen = name, True
            continue
        if head == "rmdf-scenario" and not seen:
            if len(toks) != 2 or toks[1] != "1":
                raise ParseError("unsupported scenario version (only 1)", lineno, head.col)
            seen = True
            continue
        seen = True
        if section == "scenario":
            _setting(opts, toks, lineno)
        elif section == "priorities":
            if len(toks) != 2 or not toks[1].lstrip("-").isdigit():
                raise ParseError("expected '<actor> <integer rank>'", lineno, head.col)
            opts["priorities"].append((str(head), int(toks[1])))
        elif section == "overrides":
            if len(toks) != 3 or not toks[1].isdigit():
                raise ParseError("expected '<actor> <job> <duration>'", lineno, head.col)
            opts["overrides"].append((str(head), int(toks[1]), _rational(toks[2], lineno, "ms")))
        elif section == "times":
            if len(toks) != 2:
                raise ParseError("expected '<actor> <duration>'", lineno, head.col)
            opts["fixed_times"].append((str(head), _rational(toks[1], lineno, "ms")))
        elif section == "modes":
            if head.quoted and len(toks) > 1 and toks[1].startswith(":"):
                decider, rest = str(head), [toks[1][1:]] + [str(t) for t in toks[2:]]
            elif head.endswith(":"):
                decider, rest = str(head)[:-1], [str(t) for t in toks[1:]]
            else:
                raise ParseError("expected '<decider>: <mode> ...'", lineno, head.col)
            modes = tuple(m for m in rest if m)
            if not modes:
                raise ParseError("empty mode script", lineno, head.col)
            opts["mode_script"].append((decider, modes))
        else:
            raise ParseError(f"setting outside any section: {str(head)!r}", lineno, head.col)
    if "horizon" not in opts:
        raise ParseError("scenario has no horizon")
    try:
        return SimConfig(
            horizon=opts["horizon"],
            scheduler=opts.get("scheduler", "unlimited-cores"),
            priorities=tuple(opts["priorities"]),
            joiner_policy=opts.get("joiner", "rmdf-lexicographic"),
            index_check=frozenset(opts["index_check"]),
            exec_time=opts.get("exec", "wcet"),
            fixed_times=tuple(opts["fixed_times"]),
            overrides=tuple(opts["overrides"]),
            mode_script=tuple(opts["mode_script"]),
            scope=opts.get("scope"))
    except ValueError as exc:
        raise ParseError(str(exc)) from None


def _setting(opts, toks, lineno):
    key, args = str(toks[0]), [str(t) for t in toks[1:]]
    if key in ("scheduler", "joiner", "exec") and len(args) == 1:
        value = args[0]
        if key == "joiner":
            value = _JOINER_ALIASES.get(value, value)
        if key == "scheduler":
            value = _SCHED_ALIASES.get(value, value)
        opts[key] = value
    elif key == "horizon" and len(args) == 1:
        opts["horizon"] = _rational(toks[1], lineno, "ms")
    elif key == "index-check":
        opts["index_check"].update(args)
    elif key == "scope" and args:
        opts["scope"] = tuple(args)
    else:
        raise ParseError(f"unknown or malformed setting {key!r}", lineno, toks[0].col)


def serialize_scenario(cfg):
    lines = ["rmdf-scenario 1", "", "[scenario]",
             f"scheduler {cfg.scheduler}", f"joiner {cfg.joiner_policy}",
             f"exec {cfg.exec_time}", f"horizon {rat_str(cfg.horizon)}"]
    if cfg.index_check:
        lines.append("index-check " + " ".join(quote(a) for a in sorted(cfg.index_check)))
    if cfg.scope is not None:
        lines.append("scope " + " ".join(quote(a) for a in cfg.scope))
    for title, rows in (("priorities", [f"{quote(a)} {r}" for a, r in cfg.priorities]),
                        ("overrides", [f"{quote(a)} {n} {rat_str(d)}" for a, n, d in cfg.overrides]),
                        ("times", [f"{quote(a)} {rat_str(d)}" for a, d in cfg.fixed_times]),
                        ("modes", [f"{quote(d)}: " + " ".join(m) for d, m in cfg.mode_script])):
        if rows:
            lines += ["", f"[{title}]"] + rows
    return "\n".join(lines) + "\n"


def read_scenario(path):
    with open(path, "rb") as fh:
        return parse_scenario(fh.read())


def load_scenario(name):
    """Bundled scenario, e.g. ``"flight6"``."""
    return parse_scenario((resources.files("rmdf") / "models" / f"{name}.scn").read_bytes())


def with_changes(cfg, **changes):
    data = {f: getattr(cfg, f) for f in cfg.__dataclass_fields__}
    data.update(changes)
    return SimConfig(**data)


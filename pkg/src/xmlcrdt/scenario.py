"""Line-oriented scenario files.

One action per line, ``#`` starts a comment::

    replicas 2
    mode undo
    add 1 parent=0,0 after=start tag=a      # creates edge 1,1
    setattr 1 target=1,1 name=x value=1
    deliver-all
    assert-render 2 <root><a x="1"/></root>

Header lines (``replicas``, ``mode``, ``k``, ``seed``, ``fifo``) may appear
anywhere before the first action.  Values containing spaces can be quoted.
"""

from __future__ import annotations

import shlex
from dataclasses import dataclass, field
from typing import Optional, TextIO

from .model import CrdtError, Timestamp
from .simulator import Simulation


class ScenarioParseError(ValueError):
    def __init__(self, lineno: int, message: str):
        super().__init__(f"parse error at line {lineno}: {message}")
        self.lineno = lineno


@dataclass
class Step:
    action: str
    args: dict
    lineno: int


@dataclass
class Scenario:
    seed: int = 0
    replicas: int = 2
    mode: str = "undo"
    k: int = 0
    fifo: bool = True
    steps: list[Step] = field(default_factory=list)


_ACTIONS = {
    # action: (positional names, required keys, optional keys)
    "add": (["site"], {"parent", "after", "tag"}, set()),
    "text": (["site"], {"parent", "after", "value"}, set()),
    "del": (["site"], {"target"}, set()),
    "setattr": (["site"], {"target", "name", "value"}, set()),
    "move": (["site"], {"target", "after"}, set()),
    "undo": (["site"], {"op"}, set()),
    "redo": (["site"], {"op"}, set()),
    "deliver": (["to"], {"from"}, {"count"}),
    "deliver-all": ([], set(), set()),
    "heartbeat": (["site"], set(), set()),
    "purge": (["site"], set(), set()),
    "assert-converged": ([], set(), set()),
    "assert-effect": (["site"], {"op", "effect"}, set()),
}

_TS_KEYS = {"parent", "target", "op"}


def _int(text: str, lineno: int) -> int:
    try:
        return int(text)
    except ValueError:
        raise ScenarioParseError(lineno, f"expected an integer, got {text!r}") from None


def _ts(text: str, lineno: int) -> Timestamp:
    try:
        return Timestamp.parse(text)
    except ValueError:
        raise ScenarioParseError(lineno, f"expected <clock,site>, got {text!r}") from None


def parse_scenario(text: str) -> Scenario:
    scn = Scenario()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        head = line.split(None, 1)[0]
        if head == "assert-render":
            parts = line.split(None, 2)
            if len(parts) != 3:
                raise ScenarioParseError(lineno, "assert-render <site> <canonical-xml>")
            scn.steps.append(Step(head, {"site": _int(parts[1], lineno), "xml": parts[2]}, lineno))
            continue
        try:
            words = shlex.split(line, comments=True)
        except ValueError as exc:
            raise ScenarioParseError(lineno, str(exc)) from None

        if head in ("replicas", "k", "seed"):
            if len(words) != 2:
                raise ScenarioParseError(lineno, f"{head} takes one integer")
            setattr(scn, head, _int(words[1], lineno))
            continue
        if head == "mode":
            if len(words) != 2 or words[1] not in ("lww", "undo"):
                raise ScenarioParseError(lineno, "mode lww|undo")
            scn.mode = words[1]
            continue
        if head == "fifo":
            if len(words) != 2 or words[1] not in ("yes", "no"):
                raise ScenarioParseError(lineno, "fifo yes|no")
            scn.fifo = words[1] == "yes"
            continue
        if head not in _ACTIONS:
            raise ScenarioParseError(lineno, f"unknown action {head!r}")

        positional, required, optional = _ACTIONS[head]
        pos = [w for w in words[1:] if "=" not in w]
        kv = dict(w.split("=", 1) for w in words[1:] if "=" in w)
        if head == "deliver" and len(pos) == 2 and pos[1] == "all":
            kv["count"] = "all"
            pos = pos[:1]
        if len(pos) != len(positional):
            raise ScenarioParseError(lineno, f"{head} expects {len(positional)} positional argument(s)")
        missing = required - kv.keys()
        if missing:
            raise ScenarioParseError(lineno, f"{head} missing {', '.join(sorted(missing))}")
        extra = kv.keys() - required - optional
        if extra:
            raise ScenarioParseError(lineno, f"{head} does not take {', '.join(sorted(extra))}")

        args: dict = {name: _int(v, lineno) for name, v in zip(positional, pos)}
        for key, value in kv.items():
            if key in _TS_KEYS:
                args[key] = _ts(value, lineno)
            elif key == "after":
                args[key] = None if value == "start" else _ts(value, lineno)
            elif key in ("from", "effect"):
                args[key] = _int(value, lineno)
            elif key == "count":
                args[key] = None if value == "all" else _int(value, lineno)
            elif key == "value" and head == "setattr" and value == "nil":
                args[key] = None
            else:
                args[key] = value
        scn.steps.append(Step(head, args, lineno))
    if scn.replicas < 1:
        raise ScenarioParseError(1, "replicas must be at least 1")
    return scn


def load_scenario(path: str) -> Scenario:
    with open(path, encoding="utf-8") as fh:
        return parse_scenario(fh.read())


@dataclass
class ScenarioResult:
    sim: Simulation
    checks: list[tuple[bool, str]] = field(default_factory=list)
    error: Optional[str] = None

    @property
    def ok(self) -> bool:
        return self.error is None and all(ok for ok, _ in self.checks)


def simulation_for(scn: Scenario) -> Simulation:
    return Simulation(scn.replicas, scn.mode, scn.k, scn.fifo, scn.seed)


def run_scenario(scn: Scenario, out: Optional[TextIO] = None,
                 sim: Optional[Simulation] = None) -> ScenarioResult:
    """Execute every step; assertion outcomes are collected, not raised."""
    if sim is None:
        sim = simulation_for(scn)
    result = ScenarioResult(sim)

    def check(ok: bool, message: str) -> None:
        result.checks.append((ok, message))
        if out is not None:
            out.write(("ok    " if ok else "FAIL  ") + message + "\n")

    for step in scn.steps:
        a = step.args
        try:
            if step.action == "add":
                sim.add_element(a["site"], a["parent"], a["after"], a["tag"])
            elif step.action == "text":
                sim.add_text(a["site"], a["parent"], a["after"], a["value"])
            elif step.action == "del":
                sim.delete(a["site"], a["target"])
            elif step.action == "setattr":
                sim.set_attr(a["site"], a["target"], a["name"], a["value"])
            elif step.action == "move":
                sim.move(a["site"], a["target"], a["after"])
            elif step.action == "undo":
                sim.undo(a["site"], a["op"])
            elif step.action == "redo":
                sim.redo(a["site"], a["op"])
            elif step.action == "deliver":
                sim.deliver_from(a["to"], a["from"], a.get("count", 1))
            elif step.action == "deliver-all":
                sim.deliver_all()
            elif step.action == "heartbeat":
                sim.heartbeat(a["site"])
            elif step.action == "purge":
                sim.purge(a["site"])
            elif step.action == "assert-converged":
                renders = sim.renders()
                ok = len(set(renders.values())) == 1
                detail = "" if ok else " " + " ".join(
                    f"[{s}] {x.decode()}" for s, x in renders.items())
                check(ok, f"line {step.lineno}: assert-converged{detail}")
            elif step.action == "assert-render":
                actual = sim.render(a["site"])
                expected = a["xml"].encode("utf-8")
                msg = f"line {step.lineno}: assert-render {a['site']}"
                if actual != expected:
                    msg += f"\n      expected: {expected.decode()}\n      actual:   {actual.decode()}"
                check(actual == expected, msg)
            elif step.action == "assert-effect":
                r = sim.replica(a["site"])
                op = r.log.get(a["op"])
                eff = None
                if op is not None and op.kind in ("Add", "Del", "SetAttr"):
                    eff = r.effect(op)
                check(eff == a["effect"],
                      f"line {step.lineno}: site {a['site']} {op.kind if op else 'op'} "
                      f"{a['op']} effect {eff} (expected {a['effect']})")
        except CrdtError as exc:
            result.error = f"line {step.lineno}: {exc}"
            break
    return result

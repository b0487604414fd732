"""Projection of the replicated model to plain XML.

Tombstones, histories and effect counters stay internal: an edge shows up
only when its Add is in effect and none of its Dels is, and each attribute
shows only its newest value whose effect counter is positive.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union

from .model import (
    DEL,
    POSITION,
    ROOT_ID,
    TAG,
    TEXT,
    Document,
    Edge,
    Value,
    ValueHistory,
    sorted_children,
)

ROOT_TAG = "root"


@dataclass
class Element:
    tag: str
    attrs: dict[str, str] = field(default_factory=dict)
    children: list["RenderedNode"] = field(default_factory=list)


@dataclass
class Text:
    content: str


RenderedNode = Union[Element, Text]


def is_visible(e: Edge) -> bool:
    if e.identifier == ROOT_ID:
        return True
    add = e.add_entry
    if add is None or add.effect < 1:
        return False
    dels = e.attributes.get(DEL)
    return dels is None or all(d.effect <= 0 for d in dels)


def current_attribute_value(h: Optional[ValueHistory]) -> Value:
    """Newest value with a positive effect counter; ``None`` if deleted or absent."""
    if h is None:
        return None
    for v in h:
        if v.effect > 0:
            return v.value
    return None


def current(e: Edge, name: str) -> Value:
    return current_attribute_value(e.attributes.get(name))


def _render_edge(e: Edge) -> Optional[RenderedNode]:
    if not is_visible(e):
        return None
    if e.identifier == ROOT_ID:
        tag = ROOT_TAG
    else:
        text = current(e, TEXT)
        if text is not None:
            return Text(str(text))
        tag = current(e, TAG)
        if tag is None:
            return None
    attrs = {}
    for name, h in e.attributes.items():
        if name.startswith("@"):
            continue
        v = current_attribute_value(h)
        if v is not None:
            attrs[name] = str(v)
    children = []
    for c in sorted_children(list(e.children.values()), lambda x: current(x, POSITION)):
        node = _render_edge(c)
        if node is not None:
            children.append(node)
    return Element(str(tag), attrs, children)


def render(d: Document) -> Element:
    node = _render_edge(d.root)
    assert isinstance(node, Element)
    return node


def _escape_text(s: str) -> str:
    return s.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")


def _escape_attr(s: str) -> str:
    return s.replace("&", "&amp;").replace("<", "&lt;").replace('"', "&quot;")


def _write(n: RenderedNode, out: list[str]) -> None:
    if isinstance(n, Text):
        out.append(_escape_text(n.content))
        return
    out.append("<" + n.tag)
    for name in sorted(n.attrs):
        out.append(f' {name}="{_escape_attr(n.attrs[name])}"')
    if not n.children:
        out.append("/>")
        return
    out.append(">")
    for c in n.children:
        _write(c, out)
    out.append(f"</{n.tag}>")


def serialize(n: RenderedNode) -> bytes:
    """Canonical UTF-8 XML: sorted attributes, no whitespace, self-closed empties."""
    out: list[str] = []
    _write(n, out)
    return "".join(out).encode("utf-8")


def to_xml(d: Document) -> bytes:
    return serialize(render(d))


def visible_node_count(n: RenderedNode) -> int:
    """Rendered nodes below ``n`` (``n`` itself excluded)."""
    if isinstance(n, Text):
        return 0
    return sum(1 + visible_node_count(c) for c in n.children)


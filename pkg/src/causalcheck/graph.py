"""Causal DAGs: parsing, ordering, closures and d-separation queries.

Graphs are read from a small subset of the DOT language::

    # comments run to end of line
    digraph example {
        u [observed="no"];
        u -> t; u -> y;
        t -> m -> y;
    }

Grammar (whitespace-insensitive)::

    graph     := "digraph" [ID] "{" stmt* "}"
    stmt      := node_stmt | edge_stmt
    node_stmt := ID [attrs] [";"]
    edge_stmt := ID ("->" ID)+ [";"]
    attrs     := "[" "observed" "=" ("\"yes\"" | "\"no\"" | yes | no) "]"
    ID        := [A-Za-z_][A-Za-z0-9_]*

Anything else (undirected edges, subgraphs, other attributes, ports,
``strict``) is a parse error. Self-loops, repeated edges and repeated node
statements are rejected.
"""

from __future__ import annotations

import itertools
import re
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Iterator

NAME_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*\Z")

#: Simple-path enumeration refuses graphs above this size.
MAX_ENUMERATION_NODES = 64


class GraphError(ValueError):
    """Base class for graph construction and query errors."""


class ParseError(GraphError):
    def __init__(self, message: str, line: int, column: int):
        self.line = line
        self.column = column
        super().__init__(f"line {line}, column {column}: {message}")


class CycleError(GraphError):
    def __init__(self, cycle: list[str]):
        self.cycle = cycle
        super().__init__("graph contains a directed cycle: " + " -> ".join(cycle))


class DuplicateNodeError(GraphError):
    pass


class UnknownNodeError(GraphError, KeyError):
    def __str__(self):
        return ValueError.__str__(self)


@dataclass(frozen=True)
class Path:
    """A simple path. ``forward[i]`` is True when the i-th edge points from
    ``nodes[i]`` to ``nodes[i + 1]``."""

    nodes: tuple[str, ...]
    forward: tuple[bool, ...]

    def __str__(self):
        out = [self.nodes[0]]
        for node, fwd in zip(self.nodes[1:], self.forward):
            out.append(("->" if fwd else "<-") + node)
        return "".join(out)


@dataclass(frozen=True, eq=False)
class CausalGraph:
    """Immutable DAG over named variables, some possibly unobserved."""

    nodes: tuple[str, ...]
    edges: tuple[tuple[str, str], ...]
    unobserved: frozenset[str] = frozenset()
    _parents: dict = field(init=False, repr=False, compare=False)
    _children: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        seen = set()
        for name in self.nodes:
            if not isinstance(name, str) or not NAME_RE.match(name):
                raise GraphError(f"invalid node name {name!r}")
            if name in seen:
                raise DuplicateNodeError(f"duplicate node {name!r}")
            seen.add(name)
        for name in self.unobserved:
            if name not in seen:
                raise UnknownNodeError(f"unobserved mark on unknown node {name!r}")
        parents = {n: set() for n in self.nodes}
        children = {n: set() for n in self.nodes}
        for a, b in self.edges:
            for end in (a, b):
                if end not in seen:
                    raise UnknownNodeError(f"edge {a} -> {b} references unknown node {end!r}")
            if a == b:
                raise CycleError([a, a])
            if b in children[a]:
                raise GraphError(f"repeated edge {a} -> {b}")
            children[a].add(b)
            parents[b].add(a)
        object.__setattr__(self, "nodes", tuple(self.nodes))
        object.__setattr__(self, "edges", tuple(tuple(e) for e in self.edges))
        object.__setattr__(self, "unobserved", frozenset(self.unobserved))
        object.__setattr__(self, "_parents", {k: frozenset(v) for k, v in parents.items()})
        object.__setattr__(self, "_children", {k: frozenset(v) for k, v in children.items()})
        cycle = _find_cycle(self.nodes, self._children)
        if cycle:
            raise CycleError(cycle)

    @classmethod
    def from_edges(cls, edges: Iterable[tuple[str, str]], unobserved: Iterable[str] = (),
                   nodes: Iterable[str] = ()) -> "CausalGraph":
        """Build a graph, declaring nodes in first-appearance order."""
        order = list(dict.fromkeys(itertools.chain(nodes, *edges)))
        return cls(tuple(order), tuple(edges), frozenset(unobserved))

    def __eq__(self, other):
        if not isinstance(other, CausalGraph):
            return NotImplemented
        return (set(self.nodes) == set(other.nodes) and set(self.edges) == set(other.edges)
                and self.unobserved == other.unobserved)

    def __hash__(self):
        return hash((frozenset(self.nodes), frozenset(self.edges), self.unobserved))

    def __contains__(self, node):
        return node in self._parents

    @property
    def observed(self) -> tuple[str, ...]:
        return tuple(n for n in self.nodes if n not in self.unobserved)

    def is_observed(self, node: str) -> bool:
        self._check(node)
        return node not in self.unobserved

    def parents(self, node: str) -> frozenset[str]:
        self._check(node)
        return self._parents[node]

    def children(self, node: str) -> frozenset[str]:
        self._check(node)
        return self._children[node]

    def _check(self, *nodes: str):
        for n in nodes:
            if n not in self._parents:
                raise UnknownNodeError(f"unknown node {n!r}")

    def without_edges_from(self, sources: Iterable[str]) -> "CausalGraph":
        sources = set(sources)
        self._check(*sources)
        return CausalGraph(self.nodes, tuple(e for e in self.edges if e[0] not in sources),
                           self.unobserved)

    def with_node(self, name: str, children: Iterable[str] = (), observed: bool = True
                  ) -> "CausalGraph":
        """Return a copy with a new root node pointing at ``children``."""
        if name in self:
            raise DuplicateNodeError(f"duplicate node {name!r}")
        children = list(children)
        self._check(*children)
        unobserved = self.unobserved if observed else self.unobserved | {name}
        return CausalGraph(self.nodes + (name,), self.edges + tuple((name, c) for c in children),
                           unobserved)

    def to_dot(self, name: str = "G") -> str:
        lines = [f"digraph {name} {{"]
        for n in self.nodes:
            lines.append(f'    {n} [observed="no"];' if n in self.unobserved else f"    {n};")
        for a, b in self.edges:
            lines.append(f"    {a} -> {b};")
        lines.append("}")
        return "\n".join(lines) + "\n"


def _find_cycle(nodes, children) -> list[str] | None:
    WHITE, GREY, BLACK = 0, 1, 2
    color = dict.fromkeys(nodes, WHITE)
    for root in nodes:
        if color[root] != WHITE:
            continue
        stack = [(root, iter(sorted(children[root])))]
        trail = [root]
        color[root] = GREY
        while stack:
            node, it = stack[-1]
            nxt = next(it, None)
            if nxt is None:
                color[node] = BLACK
                stack.pop()
                trail.pop()
            elif color[nxt] == GREY:
                return trail[trail.index(nxt):] + [nxt]
            elif color[nxt] == WHITE:
                color[nxt] = GREY
                stack.append((nxt, iter(sorted(children[nxt]))))
                trail.append(nxt)
    return None


# -- parsing ---------------------------------------------------------------

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r\n]+)
  | (?P<comment>\#[^\n]*)
  | (?P<arrow>->)
  | (?P<id>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<string>"[^"\n]*")
  | (?P<punct>[{}\[\];=])
    """,
    re.VERBOSE,
)


@dataclass
class _Token:
    kind: str
    text: str
    line: int
    column: int


def _tokenize(text: str) -> list[_Token]:
    tokens = []
    pos, line, line_start = 0, 1, 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        if kind not in ("ws", "comment"):
            tokens.append(_Token(kind, m.group(), line, pos - line_start + 1))
        newlines = m.group().count("\n")
        if newlines:
            line += newlines
            line_start = m.start() + m.group().rindex("\n") + 1
        pos = m.end()
    tokens.append(_Token("eof", "", line, pos - line_start + 1))
    return tokens


class _Parser:
    def __init__(self, text):
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self) -> _Token:
        return self.tokens[self.i]

    def take(self, kind=None, text=None) -> _Token:
        tok = self.tokens[self.i]
        if (kind and tok.kind != kind) or (text is not None and tok.text != text):
            want = repr(text) if text is not None else kind
            got = repr(tok.text) if tok.text else "end of input"
            raise ParseError(f"expected {want}, got {got}", tok.line, tok.column)
        self.i += 1
        return tok

    def parse(self) -> CausalGraph:
        self.take("id", "digraph")
        if self.peek().kind == "id":
            self.take()
        self.take("punct", "{")
        order: dict[str, None] = {}
        declared: set[str] = set()
        unobserved: set[str] = set()
        edges: list[tuple[str, str]] = []
        edge_set: set[tuple[str, str]] = set()
        while not (self.peek().kind == "punct" and self.peek().text == "}"):
            if self.peek().kind == "punct" and self.peek().text == ";":
                self.take()
                continue
            first = self.take("id")
            if first.text in ("digraph", "graph", "subgraph", "node", "edge", "strict"):
                raise ParseError(f"unsupported DOT keyword {first.text!r}", first.line, first.column)
            if self.peek().kind == "arrow":
                chain = [first]
                while self.peek().kind == "arrow":
                    self.take()
                    chain.append(self.take("id"))
                for a, b in zip(chain, chain[1:]):
                    if a.text == b.text:
                        raise ParseError(f"self-loop on {a.text!r}", b.line, b.column)
                    if (a.text, b.text) in edge_set:
                        raise ParseError(f"repeated edge {a.text} -> {b.text}", b.line, b.column)
                    edge_set.add((a.text, b.text))
                    edges.append((a.text, b.text))
                for tok in chain:
                    order.setdefault(tok.text)
                if self.peek().kind == "punct" and self.peek().text == "[":
                    tok = self.peek()
                    raise ParseError("edge attributes are not supported", tok.line, tok.column)
            else:
                if first.text in declared:
                    raise DuplicateNodeError(
                        f"line {first.line}, column {first.column}: duplicate node {first.text!r}")
                declared.add(first.text)
                order.setdefault(first.text)
                if self.peek().kind == "punct" and self.peek().text == "[":
                    if not self._parse_observed_attr():
                        unobserved.add(first.text)
            if self.peek().kind == "punct" and self.peek().text == ";":
                self.take()
        self.take("punct", "}")
        self.take("eof")
        return CausalGraph(tuple(order), tuple(edges), frozenset(unobserved))

    def _parse_observed_attr(self) -> bool:
        self.take("punct", "[")
        key = self.take("id")
        if key.text != "observed":
            raise ParseError(f"unsupported attribute {key.text!r}", key.line, key.column)
        self.take("punct", "=")
        val = self.peek()
        if val.kind not in ("id", "string"):
            raise ParseError("expected attribute value", val.line, val.column)
        self.take()
        value = val.text.strip('"')
        if value not in ("yes", "no"):
            raise ParseError(f'observed must be "yes" or "no", got {val.text}', val.line, val.column)
        self.take("punct", "]")
        return value == "yes"


def parse_graph(text: str) -> CausalGraph:
    """Parse DOT-subset source into a validated :class:`CausalGraph`."""
    if isinstance(text, bytes):
        text = text.decode("utf-8")
    return _Parser(text).parse()


def read_graph(path) -> CausalGraph:
    with open(path, encoding="utf-8") as fh:
        return parse_graph(fh.read())


# -- queries ---------------------------------------------------------------

def _as_set(g: CausalGraph, nodes) -> frozenset[str]:
    if isinstance(nodes, str):
        nodes = (nodes,)
    nodes = frozenset(nodes)
    g._check(*sorted(nodes))
    return nodes


def topological_order(g: CausalGraph) -> list[str]:
    """Kahn's algorithm; ties broken lexicographically for determinism."""
    import heapq

    indeg = {n: len(g._parents[n]) for n in g.nodes}
    heap = [n for n, d in indeg.items() if d == 0]
    heapq.heapify(heap)
    out = []
    while heap:
        n = heapq.heappop(heap)
        out.append(n)
        for c in g._children[n]:
            indeg[c] -= 1
            if indeg[c] == 0:
                heapq.heappush(heap, c)
    return out


def _closure(start: frozenset[str], step) -> set[str]:
    seen = set(start)
    queue = deque(start)
    while queue:
        for nxt in step(queue.popleft()):
            if nxt not in seen:
                seen.add(nxt)
                queue.append(nxt)
    return seen


def ancestors(g: CausalGraph, nodes) -> list[str]:
    """Nodes with a directed path into ``nodes``, including ``nodes``."""
    return sorted(_closure(_as_set(g, nodes), g._parents.__getitem__))


def descendants(g: CausalGraph, nodes) -> list[str]:
    """Nodes reachable along directed edges from ``nodes``, including ``nodes``."""
    return sorted(_closure(_as_set(g, nodes), g._children.__getitem__))


def d_separated(g: CausalGraph, x, y, z=()) -> bool:
    """Return True iff ``z`` d-separates ``x`` from ``y`` in ``g``.

    Uses the reachable-set ("Bayes ball") traversal over (node, direction)
    states, so cost is linear in the number of edges.
    """
    x, y, z = _as_set(g, x), _as_set(g, y), _as_set(g, z)
    if x & y or x & z or y & z:
        raise GraphError("x, y and z must be pairwise disjoint")
    if not x or not y:
        return True
    # colliders are open iff they have a descendant in z
    anc_z = _closure(z, g._parents.__getitem__)
    # "up": arrived from a child (travelling against edge direction)
    # "down": arrived from a parent
    visited = set()
    queue = deque((n, "up") for n in x)
    while queue:
        node, direction = queue.popleft()
        if (node, direction) in visited:
            continue
        visited.add((node, direction))
        if node in y:
            return False
        if direction == "up" and node not in z:
            for p in g._parents[node]:
                queue.append((p, "up"))
            for c in g._children[node]:
                queue.append((c, "down"))
        elif direction == "down":
            if node not in z:
                for c in g._children[node]:
                    queue.append((c, "down"))
            if node in anc_z:
                for p in g._parents[node]:
                    queue.append((p, "up"))
    return True


def simple_paths(g: CausalGraph, source: str, target: str) -> Iterator[Path]:
    """All simple paths between two nodes in the skeleton of ``g``."""
    g._check(source, target)
    if len(g.nodes) > MAX_ENUMERATION_NODES:
        raise GraphError(f"path enumeration refused for graphs over {MAX_ENUMERATION_NODES} nodes")
    neighbours = {n: sorted([(c, True) for c in g._children[n]] + [(p, False) for p in g._parents[n]])
                  for n in g.nodes}

    def walk(nodes, forward):
        last = nodes[-1]
        if last == target:
            yield Path(tuple(nodes), tuple(forward))
            return
        for nxt, fwd in neighbours[last]:
            if nxt not in nodes:
                yield from walk(nodes + [nxt], forward + [fwd])

    if source == target:
        return iter(())
    return walk([source], [])


def backdoor_paths(g: CausalGraph, treatment: str, outcome: str) -> list[Path]:
    """Simple paths from treatment to outcome whose first edge points into the treatment."""
    if treatment == outcome:
        raise GraphError("treatment and outcome must differ")
    return [p for p in simple_paths(g, treatment, outcome) if not p.forward[0]]

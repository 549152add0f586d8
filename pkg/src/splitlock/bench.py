"""Combinational netlists in the BENCH format.

The dialect understood here is line oriented: ``INPUT(id)`` and ``OUTPUT(id)``
declarations plus gate assignments ``id = KIND(a, b, ...)``.  Gate kinds are
case-insensitive; net ids are case-sensitive.  Two zero-input kinds extend the
classic format: ``id = TIE0`` and ``id = TIE1`` drive constant 0 / constant 1
and model tie cells.  Comments start with ``#`` and run to end of line.

A :class:`Netlist` is immutable after construction and validates itself:
every net has exactly one driver, every referenced net exists, the gate graph
is acyclic, and each gate's arity matches its kind.  Gate ids double as the
id of the net the gate drives, which keeps cell names and net names aligned
throughout the layout and attack stages.
"""

from __future__ import annotations

import heapq
import re
from dataclasses import dataclass, field
from random import Random
from typing import Iterable, Optional

__all__ = [
    "NetlistError",
    "BenchSyntaxError",
    "UnknownGateKindError",
    "DuplicateDriverError",
    "UndefinedNetError",
    "CycleError",
    "Gate",
    "Netlist",
    "Partition",
    "GATE_KINDS",
    "GATE_TAGS",
    "parse_bench",
    "write_bench",
    "topological_order",
    "structurally_equal",
    "partition_random_balanced",
    "extract_module",
]


class NetlistError(Exception):
    """Base class for netlist construction and parsing failures."""


class BenchSyntaxError(NetlistError):
    """Malformed BENCH statement."""

    def __init__(self, message: str, line: int, column: int = 1):
        super().__init__(f"line {line}, column {column}: {message}")
        self.line = line
        self.column = column


class UnknownGateKindError(NetlistError):
    """Gate kind outside the supported set."""


class DuplicateDriverError(NetlistError):
    """A net is driven more than once (two gates, or a gate and an input)."""


class UndefinedNetError(NetlistError):
    """A referenced net has no driver and is not a primary input."""


class CycleError(NetlistError):
    """The gate graph contains a combinational cycle."""


# kind -> (min arity, max arity); None means unbounded
GATE_KINDS = {
    "AND": (2, None),
    "OR": (2, None),
    "NAND": (2, None),
    "NOR": (2, None),
    "XOR": (2, None),
    "XNOR": (2, None),
    "NOT": (1, 1),
    "BUFF": (1, 1),
    "TIE0": (0, 0),
    "TIE1": (0, 0),
}

GATE_TAGS = frozenset({"regular", "key-gate", "tie-cell", "restore-logic"})


@dataclass(frozen=True)
class Gate:
    """One gate: ``output = kind(inputs)`` plus role tags.

    ``id`` and ``output`` always coincide in this codebase; both fields are
    kept so pins and nets can be named independently.  Tags record the role a
    gate plays after locking (``key-gate``, ``tie-cell``, ``restore-logic``);
    plain logic carries ``regular``.
    """

    id: str
    kind: str
    inputs: tuple
    output: str
    tags: frozenset = field(default_factory=lambda: frozenset({"regular"}))

    def __post_init__(self):
        object.__setattr__(self, "inputs", tuple(self.inputs))
        object.__setattr__(self, "tags", frozenset(self.tags))
        if self.kind not in GATE_KINDS:
            raise UnknownGateKindError(f"unknown gate kind {self.kind!r}")
        lo, hi = GATE_KINDS[self.kind]
        n = len(self.inputs)
        if n < lo or (hi is not None and n > hi):
            raise NetlistError(
                f"gate {self.id!r}: kind {self.kind} takes "
                f"{lo if hi == lo else f'at least {lo}'} input(s), got {n}"
            )
        if not self.tags <= GATE_TAGS:
            raise NetlistError(
                f"gate {self.id!r}: unknown tags {sorted(self.tags - GATE_TAGS)}"
            )
        if "tie-cell" in self.tags and self.kind not in ("TIE0", "TIE1"):
            raise NetlistError(
                f"gate {self.id!r}: tie-cell tag requires TIE0/TIE1 kind"
            )

    def is_tie(self) -> bool:
        return self.kind in ("TIE0", "TIE1")

    def retagged(self, tags: Iterable) -> "Gate":
        return Gate(self.id, self.kind, self.inputs, self.output, frozenset(tags))


class Netlist:
    """An immutable combinational netlist.

    Attributes:
        name: label carried through reports; excluded from structural equality.
        inputs: primary input net ids, in declaration order.
        outputs: primary output net ids, in declaration order.
        gates: tuple of :class:`Gate` in declaration order.
    """

    __slots__ = ("name", "inputs", "outputs", "gates", "_by_id", "_consumers", "_topo")

    def __init__(self, name, inputs, outputs, gates):
        self.name = str(name)
        self.inputs = tuple(inputs)
        self.outputs = tuple(outputs)
        self.gates = tuple(gates)
        self._validate()

    def _validate(self):
        by_id = {}
        seen_inputs = set()
        for pi in self.inputs:
            if pi in seen_inputs:
                raise DuplicateDriverError(f"input {pi!r} declared twice")
            seen_inputs.add(pi)
        for g in self.gates:
            if g.id != g.output:
                raise NetlistError(
                    f"gate id {g.id!r} must equal its output net {g.output!r}"
                )
            if g.output in seen_inputs:
                raise DuplicateDriverError(
                    f"net {g.output!r} driven by both an input and a gate"
                )
            if g.output in by_id:
                raise DuplicateDriverError(f"net {g.output!r} driven twice")
            by_id[g.output] = g
        nets = seen_inputs | by_id.keys()
        consumers = {}
        for g in self.gates:
            for slot, src in enumerate(g.inputs):
                if src not in nets:
                    raise UndefinedNetError(
                        f"gate {g.id!r} reads undefined net {src!r}"
                    )
                consumers.setdefault(src, []).append((g.id, slot))
        seen_outputs = set()
        for po in self.outputs:
            if po not in nets:
                raise UndefinedNetError(f"output {po!r} is never driven")
            if po in seen_outputs:
                raise NetlistError(f"output {po!r} declared twice")
            seen_outputs.add(po)
        self._by_id = by_id
        self._consumers = {n: tuple(c) for n, c in consumers.items()}
        self._check_acyclic()

    def _check_acyclic(self):
        indegree = {}
        for g in self.gates:
            indegree[g.id] = sum(1 for src in g.inputs if src in self._by_id)
        ready = [gid for gid, d in indegree.items() if d == 0]
        heapq.heapify(ready)
        order = []
        while ready:
            gid = heapq.heappop(ready)
            order.append(gid)
            for cid, _ in self._consumers.get(gid, ()):
                indegree[cid] -= 1
                if indegree[cid] == 0:
                    heapq.heappush(ready, cid)
        if len(order) != len(self.gates):
            stuck = sorted(gid for gid, d in indegree.items() if d > 0)
            raise CycleError(
                f"combinational cycle through {', '.join(stuck[:5])}"
                + ("..." if len(stuck) > 5 else "")
            )
        self._topo = tuple(order)

    # -- queries ------------------------------------------------------------

    def nets(self) -> frozenset:
        return frozenset(self.inputs) | self._by_id.keys()

    def gate(self, gid: str) -> Gate:
        return self._by_id[gid]

    def has_gate(self, gid: str) -> bool:
        return gid in self._by_id

    def driver_of(self, net: str) -> Optional[Gate]:
        """The gate driving ``net``, or None when it is a primary input."""
        return self._by_id.get(net)

    def consumers_of(self, net: str) -> tuple:
        """(gate id, input slot) pairs reading ``net``."""
        return self._consumers.get(net, ())

    def topological_order(self) -> tuple:
        """Gate ids, dependencies first, ties broken by id.

        The order depends only on the graph, not on declaration order, so
        simulation results are independent of how a file lists its gates.
        """
        return self._topo

    def __len__(self):
        return len(self.gates)

    def __repr__(self):
        return (
            f"Netlist({self.name!r}, {len(self.inputs)} inputs, "
            f"{len(self.outputs)} outputs, {len(self.gates)} gates)"
        )


def structurally_equal(a: Netlist, b: Netlist) -> bool:
    """True when interfaces and gate functions match.  Names and tags do not
    participate: tags are not representable in BENCH and must survive through
    sidecar files instead."""
    if a.inputs != b.inputs or a.outputs != b.outputs:
        return False
    if len(a.gates) != len(b.gates):
        return False
    for g in a.gates:
        if not b.has_gate(g.id):
            return False
        h = b.gate(g.id)
        if g.kind != h.kind or g.inputs != h.inputs:
            return False
    return True


def topological_order(netlist: Netlist) -> tuple:
    return netlist.topological_order()


# -- parsing ------------------------------------------------------------------

_INPUT_RE = re.compile(r"^(INPUT|OUTPUT)\s*\(\s*([^\s(),=]+)\s*\)$", re.IGNORECASE)
_GATE_RE = re.compile(
    r"^([^\s(),=]+)\s*=\s*([A-Za-z][A-Za-z0-9]*)\s*(?:\(\s*([^()]*?)\s*\))?$"
)


def parse_bench(text: str, name: str = "netlist") -> Netlist:
    """Parse BENCH source into a validated :class:`Netlist`.

    Raises :class:`BenchSyntaxError` for malformed statements,
    :class:`UnknownGateKindError` for unsupported kinds, and the
    :class:`Netlist` validation errors for semantic problems.  An input with
    no statements at all is a syntax error, not an empty netlist.
    """
    inputs, outputs, gates = [], [], []
    defined = {}  # net -> line of first definition
    uses = []  # (net, line) for gate inputs and outputs, checked after pass 1
    statements = 0
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        statements += 1
        m = _INPUT_RE.match(line)
        if m:
            keyword, net = m.group(1).upper(), m.group(2)
            if keyword == "INPUT":
                if net in defined:
                    raise DuplicateDriverError(
                        f"line {lineno}: net {net!r} already defined "
                        f"on line {defined[net]}"
                    )
                defined[net] = lineno
                inputs.append(net)
            else:
                outputs.append(net)
                uses.append((net, lineno))
            continue
        m = _GATE_RE.match(line)
        if m:
            lhs, kind, args = m.group(1), m.group(2).upper(), m.group(3)
            if kind not in GATE_KINDS:
                raise UnknownGateKindError(f"line {lineno}: unknown kind {kind!r}")
            if args:
                srcs = [a.strip() for a in args.split(",")]
                if any(not s or re.search(r"[\s(),=]", s) for s in srcs):
                    raise BenchSyntaxError(f"bad argument list {args!r}", lineno)
            else:
                srcs = []
            if lhs in defined:
                raise DuplicateDriverError(
                    f"line {lineno}: net {lhs!r} already defined "
                    f"on line {defined[lhs]}"
                )
            defined[lhs] = lineno
            tags = {"tie-cell"} if kind in ("TIE0", "TIE1") else {"regular"}
            gates.append(Gate(lhs, kind, tuple(srcs), lhs, frozenset(tags)))
            uses.extend((s, lineno) for s in srcs)
            continue
        raise BenchSyntaxError(f"cannot parse statement {line!r}", lineno)
    if statements == 0:
        raise BenchSyntaxError("no statements found", 1)
    for net, lineno in uses:
        if net not in defined:
            raise UndefinedNetError(f"line {lineno}: undefined net {net!r}")
    return Netlist(name, inputs, outputs, gates)


def write_bench(netlist: Netlist) -> str:
    """Serialize to BENCH text.  ``parse_bench(write_bench(n))`` is
    structurally identical to ``n``; tags are not written."""
    lines = [f"INPUT({pi})" for pi in netlist.inputs]
    lines += [f"OUTPUT({po})" for po in netlist.outputs]
    for g in netlist.gates:
        if g.is_tie():
            lines.append(f"{g.id} = {g.kind}")
        else:
            lines.append(f"{g.id} = {g.kind}({', '.join(g.inputs)})")
    return "\n".join(lines) + "\n"


# -- partitioning --------------------------------------------------------------


@dataclass(frozen=True)
class Partition:
    """One module of a partitioned netlist.

    ``boundary_inputs`` are nets the module reads but does not drive;
    ``boundary_outputs`` are nets it drives that are read outside it or are
    primary outputs.  Both are sorted lexicographically so partitions with
    equal membership compare equal.
    """

    module_index: int
    gate_ids: frozenset
    boundary_inputs: tuple
    boundary_outputs: tuple


def _boundary(netlist: Netlist, members: set) -> tuple:
    ins, outs = set(), set()
    pos = set(netlist.outputs)
    for gid in members:
        g = netlist.gate(gid)
        for src in g.inputs:
            if src not in members:
                ins.add(src)
        if g.output in pos or any(
            cid not in members for cid, _ in netlist.consumers_of(g.output)
        ):
            outs.add(g.output)
    return tuple(sorted(ins)), tuple(sorted(outs))


def partition_random_balanced(netlist: Netlist, module_count: int, seed: int) -> list:
    """Split the regular gates into ``module_count`` balanced random modules.

    A random topological order of the gates (Kahn's algorithm with seeded
    random priorities) is cut into contiguous slices whose sizes differ by at
    most one.  Slicing a linear extension keeps every module feed-forward: no
    path can leave a module and re-enter it, because all external consumers
    sit at later positions.  Logic that later compares a module's inputs and
    corrects its outputs therefore can never close a combinational loop,
    which a uniform scatter of gates over modules would not guarantee.

    Tie cells, key-gates and restore logic are excluded: partitioning
    applies to the original netlist, before locking.
    """
    regular = [g.id for g in netlist.gates if "regular" in g.tags]
    if not 1 <= module_count <= len(regular):
        raise ValueError(
            f"module_count must be in [1, {len(regular)}], got {module_count}"
        )
    rng = Random(seed)
    prio = {gid: rng.random() for gid in regular}
    members = set(regular)
    indegree = {}
    for gid in regular:
        indegree[gid] = sum(1 for src in netlist.gate(gid).inputs if src in members)
    ready = [(prio[gid], gid) for gid, d in indegree.items() if d == 0]
    heapq.heapify(ready)
    order = []
    while ready:
        _, gid = heapq.heappop(ready)
        order.append(gid)
        for cid, _ in netlist.consumers_of(gid):
            if cid in members:
                indegree[cid] -= 1
                if indegree[cid] == 0:
                    heapq.heappush(ready, (prio[cid], cid))
    base, extra = divmod(len(regular), module_count)
    parts = []
    start = 0
    for j in range(module_count):
        size = base + (1 if j < extra else 0)
        chunk = set(order[start : start + size])
        start += size
        ins, outs = _boundary(netlist, chunk)
        parts.append(Partition(j, frozenset(chunk), ins, outs))
    return parts


def extract_module(netlist: Netlist, partition: Partition, name: str = None) -> Netlist:
    """The partition as a standalone netlist: boundary inputs become primary
    inputs, boundary outputs become primary outputs, gate order is preserved."""
    gates = [g for g in netlist.gates if g.id in partition.gate_ids]
    return Netlist(
        name or f"{netlist.name}_m{partition.module_index}",
        partition.boundary_inputs,
        partition.boundary_outputs,
        gates,
    )

"""Abstract physical design: placement, layer assignment, split, recombine.

Cells (gates plus primary-input pads) occupy sites of a uniform grid, one
cell per site.  Routing is abstracted away entirely: a two-pin connection
runs from a driver output pin ``cell/O`` to a sink input pin ``cell/I<slot>``
and is summarized by its half-perimeter wirelength (the Manhattan distance
between the two cells) and by the highest metal layer it needs, looked up in
a monotone wirelength-per-layer table.

Splitting at layer ``l`` keeps every connection whose top layer is at most
``l`` in the front end and moves the rest into the back-end secret.  In
secure mode the placer ignores the tie-to-key-gate connections entirely
(tie cells land uniformly at random and stay put) and the layer step forces
those connections just above the split layer, the abstract equivalent of
lifting a net through a via stack, so the front end never betrays them.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from random import Random

from .bench import CycleError, DuplicateDriverError, Gate, Netlist
from .locking import LockedDesign
from .seeds import derive

__all__ = [
    "LayoutError",
    "GridTooSmallError",
    "UnknownPinError",
    "RecombineError",
    "Connection",
    "Placement",
    "RoutedConnection",
    "LayerAssignment",
    "FeolGate",
    "FEOLView",
    "BEOLSecret",
    "DEFAULT_UTILIZATION",
    "DEFAULT_THRESHOLDS",
    "out_pin",
    "in_pin",
    "parse_pin",
    "design_connections",
    "place",
    "assign_layers",
    "split",
    "recombine",
]

DEFAULT_UTILIZATION = 0.7
DEFAULT_THRESHOLDS = (2.0, 4.0, 8.0, 16.0, 32.0, 64.0, 128.0, math.inf)


class LayoutError(Exception):
    """Base class for layout failures."""


class GridTooSmallError(LayoutError):
    """Grid capacity below the utilization ceiling for the cell count."""


class UnknownPinError(LayoutError):
    """A pin id names a cell or slot that does not exist."""


class RecombineError(LayoutError):
    """Recombination left sink pins unconnected."""


def out_pin(cell: str) -> str:
    return f"{cell}/O"


def in_pin(cell: str, slot: int) -> str:
    return f"{cell}/I{slot}"


def parse_pin(pin: str):
    """Split a pin id into (cell, slot); slot is None for output pins."""
    cell, sep, tail = pin.rpartition("/")
    if sep and cell:
        if tail == "O":
            return cell, None
        if len(tail) > 1 and tail[0] == "I" and tail[1:].isdigit():
            return cell, int(tail[1:])
    raise UnknownPinError(f"malformed pin id {pin!r}")


@dataclass(frozen=True)
class Connection:
    """One two-pin connection of the star-routed netlist."""

    driver_pin: str
    sink_pin: str
    driver_cell: str
    sink_cell: str
    slot: int
    is_key: bool


def design_connections(design: LockedDesign) -> list:
    """All gate-input connections of the design, in gate and slot order.
    A connection is a key connection when its sink is a key-gate's key
    input, which by construction means a tie cell drives it."""
    key_pins = design.key_sink_pins()
    conns = []
    for g in design.netlist.gates:
        for slot, src in enumerate(g.inputs):
            sp = in_pin(g.id, slot)
            conns.append(
                Connection(out_pin(src), sp, src, g.id, slot, sp in key_pins)
            )
    return conns


@dataclass(frozen=True)
class Placement:
    """Cell positions on a W x H grid; ``fixed`` cells never move."""

    grid: tuple
    positions: dict
    fixed: frozenset

    def to_dict(self) -> dict:
        return {
            "grid": list(self.grid),
            "positions": {c: list(p) for c, p in self.positions.items()},
            "fixed": sorted(self.fixed),
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "Placement":
        return cls(
            tuple(doc["grid"]),
            {c: tuple(p) for c, p in doc["positions"].items()},
            frozenset(doc["fixed"]),
        )


# -- simulated annealing placement ------------------------------------------------


def _anneal(xs, ys, conn_a, conn_b, adj, movable, fixed, W, H, rng,
            moves_per_cell, cooling):
    """Swap-or-relocate annealing over half-perimeter wirelength.

    The starting temperature is calibrated so a typical uphill move has
    roughly even odds; each level runs ``moves_per_cell`` attempts per
    movable cell; cooling is geometric.  The schedule freezes when a level
    accepts nothing, when acceptance falls under half a percent, or when the
    temperature has dropped three decades.
    """
    n_sites = W * H
    occ = [-1] * n_sites
    for ci in range(len(xs)):
        occ[ys[ci] * W + xs[ci]] = ci
    n_conns = len(conn_a)
    stamp = [-1] * n_conns
    exp = math.exp
    abs_ = abs

    def local_cost(cells, move_id):
        s = 0
        for c in cells:
            for t in adj[c]:
                if stamp[t] == move_id:
                    continue
                stamp[t] = move_id
                a, b = conn_a[t], conn_b[t]
                s += abs_(xs[a] - xs[b]) + abs_(ys[a] - ys[b])
        return s

    def attempt(move_id, temperature, commit=True):
        c = movable[rng.randrange(len(movable))]
        site = rng.randrange(n_sites)
        o = occ[site]
        if o == c or (o >= 0 and fixed[o]):
            return 0
        cells = (c,) if o < 0 else (c, o)
        old_cost = local_cost(cells, 2 * move_id)
        cx, cy = xs[c], ys[c]
        sx, sy = site % W, site // W
        xs[c], ys[c] = sx, sy
        if o >= 0:
            xs[o], ys[o] = cx, cy
        new_cost = local_cost(cells, 2 * move_id + 1)
        delta = new_cost - old_cost
        keep = commit and (
            delta <= 0 or rng.random() < exp(-delta / temperature)
        )
        if keep:
            occ[site] = c
            occ[cy * W + cx] = o
            return 1 if delta != 0 else 2
        xs[c], ys[c] = cx, cy
        if o >= 0:
            xs[o], ys[o] = sx, sy
        return -delta if not commit else 0

    if not movable or not conn_a:
        return
    # probe moves calibrate the starting temperature
    uphill = []
    move_id = 0
    for _ in range(2 * len(movable)):
        d = attempt(move_id, 1.0, commit=False)
        move_id += 1
        if isinstance(d, (int, float)) and d < 0:
            uphill.append(-d)
    t0 = (sum(uphill) / len(uphill)) / math.log(2) if uphill else 1.0
    temperature = t0
    level_moves = moves_per_cell * len(movable)
    for _level in range(200):
        accepted = 0
        for _ in range(level_moves):
            if attempt(move_id, temperature):
                accepted += 1
            move_id += 1
        temperature *= cooling
        if (
            accepted == 0
            or accepted < 0.005 * level_moves
            or temperature < t0 * 1e-3
        ):
            break


def place(
    design: LockedDesign,
    grid=None,
    seed: int = 0,
    mode: str = "secure",
    moves_per_cell: int = 100,
    cooling: float = 0.95,
) -> Placement:
    """Place all cells of the design on a grid.

    ``mode="secure"`` drops every key connection from the objective, puts
    the tie cells on uniformly random sites and fixes them there, so nothing
    about a tie's position relates it to its key-gate.  ``mode="naive"``
    optimizes all connections alike.  The default grid is the smallest
    square within the utilization ceiling.
    """
    if mode not in ("secure", "naive"):
        raise ValueError(f"mode must be 'secure' or 'naive', got {mode!r}")
    nl = design.netlist
    cells = list(nl.inputs) + [g.id for g in nl.gates]
    if grid is None:
        side = math.ceil(math.sqrt(len(cells) / DEFAULT_UTILIZATION))
        grid = (side, side)
    W, H = grid
    if len(cells) > W * H * DEFAULT_UTILIZATION:
        raise GridTooSmallError(
            f"{len(cells)} cells need at least "
            f"{math.ceil(len(cells) / DEFAULT_UTILIZATION)} sites at "
            f"{DEFAULT_UTILIZATION:.0%} utilization; grid has {W * H}"
        )
    conns = design_connections(design)
    objective = [c for c in conns if mode == "naive" or not c.is_key]
    rng = Random(seed)
    pos = {}
    fixed_cells = set()
    sites = [(x, y) for y in range(H) for x in range(W)]
    if mode == "secure":
        ties = [g.id for g in nl.gates if "tie-cell" in g.tags]
        tie_rng = Random(derive(seed, "tie-sites"))
        for cell, site in zip(ties, tie_rng.sample(sites, len(ties))):
            pos[cell] = site
            fixed_cells.add(cell)
    taken = set(pos.values())
    free = [s for s in sites if s not in taken]
    rng.shuffle(free)
    rest = [c for c in cells if c not in fixed_cells]
    pos.update(zip(rest, free))
    index = {c: i for i, c in enumerate(cells)}
    xs = [pos[c][0] for c in cells]
    ys = [pos[c][1] for c in cells]
    conn_a, conn_b = [], []
    adj = [[] for _ in cells]
    for conn in objective:
        a, b = index[conn.driver_cell], index[conn.sink_cell]
        if a == b:
            continue
        t = len(conn_a)
        conn_a.append(a)
        conn_b.append(b)
        adj[a].append(t)
        adj[b].append(t)
    fixed_mask = [c in fixed_cells for c in cells]
    movable = [i for i, c in enumerate(cells) if c not in fixed_cells]
    _anneal(xs, ys, conn_a, conn_b, adj, movable, fixed_mask, W, H, rng,
            moves_per_cell, cooling)
    final = {c: (xs[i], ys[i]) for c, i in index.items()}
    return Placement((W, H), final, frozenset(fixed_cells))


# -- layer assignment --------------------------------------------------------------


@dataclass(frozen=True)
class RoutedConnection:
    driver_pin: str
    sink_pin: str
    top_layer: int
    is_key: bool


@dataclass(frozen=True)
class LayerAssignment:
    """Top metal layer per connection under a wirelength-threshold model."""

    mode: str
    split_layer: int
    thresholds: tuple
    entries: tuple

    def to_dict(self) -> dict:
        return {
            "mode": self.mode,
            "split_layer": self.split_layer,
            "thresholds": [None if math.isinf(t) else t for t in self.thresholds],
            "connections": [
                {
                    "driver": e.driver_pin,
                    "sink": e.sink_pin,
                    "top_layer": e.top_layer,
                    "is_key": e.is_key,
                }
                for e in self.entries
            ],
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "LayerAssignment":
        return cls(
            doc["mode"],
            doc["split_layer"],
            tuple(math.inf if t is None else t for t in doc["thresholds"]),
            tuple(
                RoutedConnection(
                    c["driver"], c["sink"], c["top_layer"], c["is_key"]
                )
                for c in doc["connections"]
            ),
        )


def _hpwl(placement, a, b):
    xa, ya = placement.positions[a]
    xb, yb = placement.positions[b]
    return abs(xa - xb) + abs(ya - yb)


def assign_layers(
    placement: Placement,
    design: LockedDesign,
    thresholds=None,
    split_layer: int = 4,
    mode: str = "secure",
) -> LayerAssignment:
    """Assign each connection the lowest layer whose wirelength budget
    covers it; in secure mode key connections are forced to
    ``split_layer + 1`` regardless of length."""
    if mode not in ("secure", "naive"):
        raise ValueError(f"mode must be 'secure' or 'naive', got {mode!r}")
    thresholds = tuple(DEFAULT_THRESHOLDS if thresholds is None else thresholds)
    if len(thresholds) < 2:
        raise ValueError("need at least two layers")
    for lo, hi in zip(thresholds, thresholds[1:]):
        if not lo < hi:
            raise ValueError("thresholds must be strictly increasing")
    if not math.isinf(thresholds[-1]):
        raise ValueError("the top layer must be unbounded")
    top = len(thresholds)
    limit = top - 1 if mode == "secure" else top
    if not 1 <= split_layer <= limit:
        raise ValueError(
            f"split_layer must be in [1, {limit}] for {mode} mode with "
            f"{top} layers, got {split_layer}"
        )
    entries = []
    for conn in design_connections(design):
        if mode == "secure" and conn.is_key:
            layer = split_layer + 1
        else:
            hp = _hpwl(placement, conn.driver_cell, conn.sink_cell)
            layer = next(
                l + 1 for l, t in enumerate(thresholds) if hp <= t
            )
        entries.append(
            RoutedConnection(conn.driver_pin, conn.sink_pin, layer, conn.is_key)
        )
    return LayerAssignment(mode, split_layer, thresholds, tuple(entries))


# -- split and recombine ------------------------------------------------------------


@dataclass(frozen=True)
class FeolGate:
    """A gate as the front end shows it: broken input slots hold None."""

    id: str
    kind: str
    inputs: tuple
    tags: frozenset


@dataclass(frozen=True)
class DanglingDriver:
    pin: str
    position: tuple
    kind: str
    feol_fanout: int


@dataclass(frozen=True)
class DanglingSink:
    pin: str
    position: tuple
    kind: str
    slot: int


@dataclass(frozen=True)
class FEOLView:
    """Everything the foundry (and so the attacker) sees: cell geometry,
    kinds, role tags, the intact wiring, the dangling pins left by the split,
    and the per-layer wirelength bounds (process design rules, hence public).
    Key bits and broken-edge pairings never appear here."""

    name: str
    mode: str
    split_layer: int
    thresholds: tuple
    inputs: tuple
    outputs: tuple
    gates: tuple
    dangling_drivers: tuple
    dangling_sinks: tuple
    placement: Placement

    def gate_by_id(self) -> dict:
        return {g.id: g for g in self.gates}

    def cell_kind(self, cell: str) -> str:
        for g in self.gates:
            if g.id == cell:
                return g.kind
        if cell in self.inputs:
            return "PI"
        raise UnknownPinError(f"unknown cell {cell!r}")

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "mode": self.mode,
            "split_layer": self.split_layer,
            "thresholds": [
                None if math.isinf(t) else t for t in self.thresholds
            ],
            "inputs": list(self.inputs),
            "outputs": list(self.outputs),
            "gates": [
                {
                    "id": g.id,
                    "kind": g.kind,
                    "inputs": list(g.inputs),
                    "tags": sorted(g.tags),
                }
                for g in self.gates
            ],
            "dangling_drivers": [
                {
                    "pin": d.pin,
                    "position": list(d.position),
                    "kind": d.kind,
                    "feol_fanout": d.feol_fanout,
                }
                for d in self.dangling_drivers
            ],
            "dangling_sinks": [
                {
                    "pin": s.pin,
                    "position": list(s.position),
                    "kind": s.kind,
                    "slot": s.slot,
                }
                for s in self.dangling_sinks
            ],
            "placement": self.placement.to_dict(),
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "FEOLView":
        return cls(
            doc["name"],
            doc["mode"],
            doc["split_layer"],
            tuple(
                math.inf if t is None else t for t in doc["thresholds"]
            ),
            tuple(doc["inputs"]),
            tuple(doc["outputs"]),
            tuple(
                FeolGate(
                    g["id"],
                    g["kind"],
                    tuple(None if s is None else s for s in g["inputs"]),
                    frozenset(g["tags"]),
                )
                for g in doc["gates"]
            ),
            tuple(
                DanglingDriver(
                    d["pin"], tuple(d["position"]), d["kind"], d["feol_fanout"]
                )
                for d in doc["dangling_drivers"]
            ),
            tuple(
                DanglingSink(
                    s["pin"], tuple(s["position"]), s["kind"], s["slot"]
                )
                for s in doc["dangling_sinks"]
            ),
            Placement.from_dict(doc["placement"]),
        )


@dataclass(frozen=True)
class BEOLSecret:
    """The withheld wiring: (driver pin, sink pin) pairs routed above the
    split layer."""

    edges: tuple

    def to_dict(self) -> dict:
        return {"edges": [list(e) for e in self.edges]}

    @classmethod
    def from_dict(cls, doc: dict) -> "BEOLSecret":
        return cls(tuple((d, s) for d, s in doc["edges"]))


def split(
    design: LockedDesign,
    placement: Placement,
    layers: LayerAssignment,
    split_layer=None,
):
    """Separate the design at a layer.  Returns ``(FEOLView, BEOLSecret)``:
    connections topping out above the layer leave a hole at their sink slot
    and a dangling entry on both pins; everything else stays visible."""
    sl = layers.split_layer if split_layer is None else split_layer
    broken = [e for e in layers.entries if e.top_layer > sl]
    broken_sinks = {e.sink_pin for e in broken}
    nl = design.netlist
    gates = []
    for g in nl.gates:
        holes = tuple(
            None if in_pin(g.id, s) in broken_sinks else src
            for s, src in enumerate(g.inputs)
        )
        gates.append(FeolGate(g.id, g.kind, holes, g.tags))
    kind_of = {g.id: g.kind for g in nl.gates}
    intact_fanout = Counter(
        e.driver_pin for e in layers.entries if e.top_layer <= sl
    )
    sinks = []
    for e in sorted(broken, key=lambda e: e.sink_pin):
        cell, slot = parse_pin(e.sink_pin)
        sinks.append(
            DanglingSink(e.sink_pin, placement.positions[cell], kind_of[cell], slot)
        )
    drivers = []
    for dp in sorted({e.driver_pin for e in broken}):
        cell, _ = parse_pin(dp)
        kind = kind_of.get(cell, "PI")
        drivers.append(
            DanglingDriver(dp, placement.positions[cell], kind, intact_fanout[dp])
        )
    feol = FEOLView(
        nl.name,
        layers.mode,
        sl,
        layers.thresholds,
        nl.inputs,
        nl.outputs,
        tuple(gates),
        tuple(drivers),
        tuple(sinks),
        placement,
    )
    secret = BEOLSecret(tuple(sorted((e.driver_pin, e.sink_pin) for e in broken)))
    return feol, secret


def recombine(feol: FEOLView, secret: BEOLSecret) -> Netlist:
    """Reapply withheld edges to the front end and rebuild the netlist.

    Every edge must land on an existing, still-open sink slot and name an
    existing driver cell; the result must come out acyclic.  Recombining a
    front end with the matching secret reproduces the netlist that was
    split, tags included.
    """
    gate_map = {g.id: list(g.inputs) for g in feol.gates}
    cells = set(gate_map) | set(feol.inputs)
    for driver_pin, sink_pin in secret.edges:
        dcell, dslot = parse_pin(driver_pin)
        if dslot is not None or dcell not in cells:
            raise UnknownPinError(f"unknown driver pin {driver_pin!r}")
        scell, slot = parse_pin(sink_pin)
        if slot is None or scell not in gate_map:
            raise UnknownPinError(f"unknown sink pin {sink_pin!r}")
        inputs = gate_map[scell]
        if slot >= len(inputs):
            raise UnknownPinError(f"sink pin {sink_pin!r} is out of range")
        if inputs[slot] is not None:
            raise DuplicateDriverError(f"sink pin {sink_pin!r} driven twice")
        inputs[slot] = dcell
    holes = sum(1 for ins in gate_map.values() for s in ins if s is None)
    if holes:
        raise RecombineError(f"{holes} sink pins remain unconnected")
    gates = [
        Gate(g.id, g.kind, tuple(gate_map[g.id]), g.id, g.tags)
        for g in feol.gates
    ]
    return Netlist(feol.name, feol.inputs, feol.outputs, gates)

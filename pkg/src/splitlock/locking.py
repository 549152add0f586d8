"""Stuck-at-fault-injection logic locking.

Each module of a partitioned netlist is deliberately broken by one injected
stuck-at fault and repaired by restore logic that recognizes the module-input
vectors where the fault shows (the failing patterns) and flips the affected
outputs back.  Pattern bits are compared against module inputs through
XNOR/XOR key-gates whose second input comes from a tie cell, one per key bit:
a pattern bit is XORed with a uniform random mask bit, the mask picks the
gate kind (XNOR for mask 0, XOR for mask 1), and the tie cell supplies the
masked bit.  The netlist then computes the original function exactly when
every tie cell carries its intended constant; any other assignment leaves at
least one module miscorrected.

The tie cells themselves sit in the netlist like any other gate.  What hides
the key is the later layout step, which routes every tie-to-key-gate
connection above the split layer, so the tie kinds are visible but their
association with key-gates is not.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from random import Random
from typing import Optional

from .bench import (
    Gate,
    Netlist,
    Partition,
    extract_module,
    parse_bench,
    partition_random_balanced,
    write_bench,
)
from .seeds import derive
from .sim import (
    EXHAUSTIVE_LIMIT,
    ExhaustiveLimitError,
    Fault,
    FailingPattern,
    check_equivalence,
    find_failing_patterns,
)

__all__ = [
    "LockingError",
    "NoDetectableFaultError",
    "KeyBudgetError",
    "FaultOutsidePartitionError",
    "FaultCost",
    "KeyAssignment",
    "Key",
    "ModuleRecord",
    "LockedDesign",
    "inject_and_simplify",
    "evaluate_fault_cost",
    "select_fault",
    "build_restore",
    "lock",
    "apply_key",
    "unlocked_design",
    "save_locked_design",
    "load_locked_design",
]


class LockingError(Exception):
    """Base class for locking failures."""


class NoDetectableFaultError(LockingError):
    """Every candidate fault in a module is undetectable."""


class KeyBudgetError(LockingError):
    """No detectable fault offers enough pattern bits to absorb the module's
    key-bit budget."""


class FaultOutsidePartitionError(LockingError):
    """Cost evaluation asked for a fault whose net is not driven inside the
    partition."""


@dataclass(frozen=True)
class FaultCost:
    """Gate-count cost of locking a module with one fault: ``cost_fi`` is the
    module after injection and simplification, ``cost_rest`` the restore
    logic including key-gates and tie cells.  Undetectable faults carry an
    infinite total."""

    fault: Fault
    cost_fi: int
    cost_rest: float
    total: float


@dataclass(frozen=True)
class KeyAssignment:
    """Where key bit ``index`` lives: tie cell ``tie`` drives input ``slot``
    of key-gate ``key_gate``."""

    index: int
    tie: str
    key_gate: str
    slot: int


@dataclass(frozen=True)
class Key:
    """The key bit vector plus the bit-to-hardware mapping."""

    bits: tuple
    assignments: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.bits)


@dataclass(frozen=True)
class ModuleRecord:
    """What locking did to one module, enough to rebuild role tags and to
    audit the chosen fault."""

    index: int
    fault: Fault
    patterns: tuple
    key_indices: tuple
    inputs: tuple
    outputs: tuple
    restore_gates: tuple


@dataclass(frozen=True)
class LockedDesign:
    """A locked netlist with its key and per-module records.

    The netlist embeds the correct tie kinds (tie cells are visible hardware;
    the secret is which key-gate each one drives, hidden by the split).
    ``original_inputs``/``original_outputs`` restate the pre-locking
    interface, which locking never changes.
    """

    netlist: Netlist
    key: Key
    original_inputs: tuple
    original_outputs: tuple
    module_records: tuple

    @property
    def k(self) -> int:
        return len(self.key.bits)

    def tie_ids(self) -> frozenset:
        return frozenset(a.tie for a in self.key.assignments.values())

    def key_sink_pins(self) -> dict:
        """Map ``key_gate/I<slot>`` pin -> key bit index."""
        return {
            f"{a.key_gate}/I{a.slot}": a.index
            for a in self.key.assignments.values()
        }


def unlocked_design(netlist: Netlist) -> LockedDesign:
    """Wrap a plain netlist as a zero-key design so layout and split can run
    on unlocked circuits."""
    return LockedDesign(netlist, Key((), {}), netlist.inputs, netlist.outputs, ())


# -- fault injection and simplification -----------------------------------------


def _fold(kind, live, cvals):
    """Fold constant inputs into a gate.  Returns (kind', inputs', const):
    const is 0/1 when the gate collapses to a constant, else None."""
    if kind == "TIE0":
        return None, None, 0
    if kind == "TIE1":
        return None, None, 1
    if kind in ("NOT", "BUFF"):
        inv = kind == "NOT"
        if cvals:
            return None, None, cvals[0] ^ inv
        return ("NOT" if inv else "BUFF"), live, None
    if kind in ("AND", "NAND"):
        inv = kind == "NAND"
        if 0 in cvals:
            return None, None, 0 ^ inv
        if not live:
            return None, None, 1 ^ inv
        if len(live) == 1:
            return ("NOT" if inv else "BUFF"), live, None
        return ("NAND" if inv else "AND"), live, None
    if kind in ("OR", "NOR"):
        inv = kind == "NOR"
        if 1 in cvals:
            return None, None, 1 ^ inv
        if not live:
            return None, None, 0 ^ inv
        if len(live) == 1:
            return ("NOT" if inv else "BUFF"), live, None
        return ("NOR" if inv else "OR"), live, None
    inv = 1 if kind == "XNOR" else 0
    for v in cvals:
        inv ^= v
    if not live:
        return None, None, inv
    if len(live) == 1:
        return ("NOT" if inv else "BUFF"), live, None
    return ("XNOR" if inv else "XOR"), live, None


def inject_and_simplify(netlist: Netlist, fault: Fault) -> Netlist:
    """Replace the fault net's driver by a constant and simplify.

    Constant propagation, single-input collapsing (one-input AND becomes a
    buffer, one-input NAND an inverter, and so on), buffer elision and dead
    gate removal run to a fixed point.  The interface is preserved; a primary
    output that folds to a constant keeps a TIE0/TIE1 driver.  The result is
    functionally identical to simulating the original with the fault forced.
    """
    driver = netlist.driver_of(fault.net)
    if driver is None:
        if fault.net in set(netlist.inputs):
            raise ValueError("cannot simplify a fault on a primary input")
        raise ValueError(f"fault on undefined net {fault.net!r}")
    const = {fault.net: fault.stuck_value}
    alias = {}
    kinds, ins, tags = {}, {}, {}
    for g in netlist.gates:
        if g.id == fault.net:
            continue  # the stuck net keeps only its constant
        kinds[g.id] = g.kind
        ins[g.id] = list(g.inputs)
        tags[g.id] = g.tags
    topo0 = [gid for gid in netlist.topological_order() if gid in kinds]
    pos = set(netlist.outputs)

    def resolve(net):
        while net in alias:
            net = alias[net]
        return net

    changed = True
    while changed:
        changed = False
        for gid in topo0:
            if gid not in kinds:
                continue
            live, cvals = [], []
            for s in ins[gid]:
                s = resolve(s)
                if s in const:
                    cvals.append(const[s])
                else:
                    live.append(s)
            kind, new_ins, cv = _fold(kinds[gid], live, cvals)
            if cv is not None:
                const[gid] = cv
                del kinds[gid], ins[gid]
                changed = True
            elif kind == "BUFF" and gid not in pos:
                alias[gid] = new_ins[0]
                del kinds[gid], ins[gid]
                changed = True
            elif kind != kinds[gid] or new_ins != ins[gid]:
                kinds[gid], ins[gid] = kind, new_ins
                changed = True
        # sweep gates no output depends on
        marked = set()
        stack = [resolve(po) for po in pos]
        while stack:
            net = stack.pop()
            if net in marked or net not in kinds:
                continue
            marked.add(net)
            stack.extend(resolve(s) for s in ins[net])
        dead = [gid for gid in kinds if gid not in marked]
        for gid in dead:
            del kinds[gid], ins[gid]
            changed = True
    gates = [
        Gate(gid, kinds[gid], tuple(resolve(s) for s in ins[gid]), gid, tags[gid])
        for gid in (g.id for g in netlist.gates)
        if gid in kinds
    ]
    for po in netlist.outputs:
        r = resolve(po)
        if r in const and po not in {g.id for g in gates}:
            kind = "TIE1" if const[r] else "TIE0"
            gates.append(Gate(po, kind, (), po, frozenset({"tie-cell"})))
    return Netlist(f"{netlist.name}_fi", netlist.inputs, netlist.outputs, gates)


# -- restore construction --------------------------------------------------------


@dataclass(frozen=True)
class RestoreBuild:
    """Output of :func:`build_restore`: the fragment's gates, the key slice,
    and which module outputs received a correction gate."""

    gates: tuple
    assignments: tuple
    key_bits: tuple
    corrected: frozenset


def build_restore(
    patterns,
    key_indices,
    mask_seed: int,
    *,
    inputs,
    outputs,
    faulty,
    prefix: str,
    tie_prefix: str = "tie",
    keygate_prefix: str = "kg",
) -> RestoreBuild:
    """Build the pattern-recognition and correction fragment for one module.

    Pattern bits are consumed in (pattern, bit) order; the first
    ``len(key_indices)`` of them become keyed: each keyed bit *p* draws a
    uniform mask bit *m* from ``mask_seed``, stores ``p XOR m`` in a tie cell
    and compares through XNOR (m = 0) or XOR (m = 1), so the tie constant
    alone is an unbiased coin regardless of the pattern.  Unkeyed bits
    compare directly: the input net itself for a 1, a shared inverter for a
    0.  Each pattern gets one AND (or its single literal), each touched
    output an OR of its patterns' fire signals and an XOR correction.

    ``faulty`` maps each corrected output net to the net carrying its faulty
    value, or to a 0/1 constant when injection collapsed it; corrections on
    constants fold to a buffer or inverter.  ``prefix`` must make generated
    ids unique in the final netlist.
    """
    width = len(inputs)
    slots = [(p, b) for p in range(len(patterns)) for b in range(width)]
    if len(key_indices) > len(slots):
        raise KeyBudgetError(
            f"{len(key_indices)} key bits exceed {len(slots)} pattern bits"
        )
    rng = Random(mask_seed)
    keyed = {}
    assignments = []
    key_bits = []
    gates = []
    for (p, b), index in zip(slots, key_indices):
        pattern_bit = patterns[p].inputs[b]
        mask = rng.getrandbits(1)
        bit = pattern_bit ^ mask
        tie_id = f"{tie_prefix}{index}"
        kg_id = f"{keygate_prefix}{index}"
        gates.append(
            Gate(tie_id, "TIE1" if bit else "TIE0", (), tie_id,
                 frozenset({"tie-cell"}))
        )
        gates.append(
            Gate(kg_id, "XOR" if mask else "XNOR", (inputs[b], tie_id), kg_id,
                 frozenset({"key-gate"}))
        )
        keyed[(p, b)] = kg_id
        assignments.append(KeyAssignment(index, tie_id, kg_id, 1))
        key_bits.append(bit)
    restore_tag = frozenset({"restore-logic"})
    inverters = {}

    def literal(p, b):
        if (p, b) in keyed:
            return keyed[(p, b)]
        if patterns[p].inputs[b]:
            return inputs[b]
        net = inputs[b]
        if net not in inverters:
            inv_id = f"{prefix}n_{net}"
            gates.append(Gate(inv_id, "NOT", (net,), inv_id, restore_tag))
            inverters[net] = inv_id
        return inverters[net]

    fire = []
    for p in range(len(patterns)):
        lits = [literal(p, b) for b in range(width)]
        if len(lits) == 1:
            fire.append(lits[0])
        else:
            pid = f"{prefix}p{p}"
            gates.append(Gate(pid, "AND", tuple(lits), pid, restore_tag))
            fire.append(pid)
    corrected = []
    for j, out in enumerate(outputs):
        hits = [fire[p] for p in range(len(patterns)) if patterns[p].error_mask[j]]
        if not hits:
            continue
        if len(hits) == 1:
            any_fire = hits[0]
        else:
            oid = f"{prefix}or_{out}"
            gates.append(Gate(oid, "OR", tuple(hits), oid, restore_tag))
            any_fire = oid
        src = faulty[out]
        if src == 0:
            g = Gate(out, "BUFF", (any_fire,), out, restore_tag)
        elif src == 1:
            g = Gate(out, "NOT", (any_fire,), out, restore_tag)
        else:
            g = Gate(out, "XOR", (src, any_fire), out, restore_tag)
        gates.append(g)
        corrected.append(out)
    return RestoreBuild(
        tuple(gates), tuple(assignments), tuple(key_bits), frozenset(corrected)
    )


# -- fault selection -------------------------------------------------------------


def _corrected_outputs(patterns, outputs):
    touched = set()
    for p in patterns:
        for j, bit in enumerate(p.error_mask):
            if bit:
                touched.add(outputs[j])
    return touched


def _restore_cost(patterns, key_budget, inputs, outputs) -> int:
    """Gate count of the restore fragment, via the real builder so the cost
    scan can never drift from construction."""
    probe = build_restore(
        patterns,
        list(range(key_budget)),
        0,
        inputs=inputs,
        outputs=outputs,
        faulty={o: f"?{o}" for o in outputs},
        prefix="?",
    )
    return len(probe.gates)


def evaluate_fault_cost(
    netlist: Netlist, partition: Partition, fault: Fault, key_budget: int = 0
) -> FaultCost:
    """Cost of locking ``partition`` with ``fault``.

    ``cost_fi`` counts the module's gates after injection and
    simplification; ``cost_rest`` counts the restore fragment built for the
    fault's failing patterns with ``key_budget`` keyed bits.  A fault with no
    failing patterns, or with too few pattern bits to absorb the budget, gets
    an infinite total.
    """
    if fault.net not in partition.gate_ids:
        raise FaultOutsidePartitionError(
            f"net {fault.net!r} is not driven inside module {partition.module_index}"
        )
    sub = extract_module(netlist, partition)
    if len(sub.inputs) > EXHAUSTIVE_LIMIT:
        raise ExhaustiveLimitError(
            f"module {partition.module_index} has {len(sub.inputs)} inputs; "
            f"failing patterns need an exhaustive sweep of at most "
            f"{EXHAUSTIVE_LIMIT}"
        )
    patterns = find_failing_patterns(sub, fault)
    cost_fi = len(inject_and_simplify(sub, fault).gates)
    if not patterns or key_budget > len(patterns) * len(sub.inputs):
        return FaultCost(fault, cost_fi, math.inf, math.inf)
    cost_rest = _restore_cost(patterns, key_budget, sub.inputs, sub.outputs)
    return FaultCost(fault, cost_fi, cost_rest, cost_fi + cost_rest)


def select_fault(netlist: Netlist, partition: Partition, key_budget: int = 0):
    """Pick the cheapest detectable fault for one module.

    Scans every gate-output net of the partition at both stuck values,
    ranks by total cost with ties broken toward fewer failing patterns and
    then lexicographic (net, stuck value).  Candidates are screened by
    failing-pattern count first: a fault's restore carries at least one gate
    per pattern plus the tie cells, so anything whose count already exceeds
    the best total so far cannot win and is skipped without building it.

    Returns ``(fault, patterns)``.
    """
    sub = extract_module(netlist, partition)
    if len(sub.inputs) > EXHAUSTIVE_LIMIT:
        raise ExhaustiveLimitError(
            f"module {partition.module_index} has {len(sub.inputs)} inputs; "
            f"failing patterns need an exhaustive sweep of at most "
            f"{EXHAUSTIVE_LIMIT}"
        )
    width = len(sub.inputs)
    screened = []
    for net in sorted(partition.gate_ids):
        for sv in (0, 1):
            patterns = find_failing_patterns(sub, Fault(net, sv))
            if patterns:
                screened.append((len(patterns), net, sv, patterns))
    if not screened:
        raise NoDetectableFaultError(
            f"module {partition.module_index}: no detectable stuck-at fault"
        )
    screened.sort(key=lambda t: (t[0], t[1], t[2]))
    best = None
    best_key = None
    for count, net, sv, patterns in screened:
        if best is not None and count + key_budget > best_key[0]:
            break  # sorted by count: nothing later can beat the best total
        if key_budget > count * width:
            continue
        fault = Fault(net, sv)
        cost_fi = len(inject_and_simplify(sub, fault).gates)
        cost_rest = _restore_cost(patterns, key_budget, sub.inputs, sub.outputs)
        cand_key = (cost_fi + cost_rest, count, net, sv)
        if best_key is None or cand_key < best_key:
            best_key = cand_key
            best = (fault, patterns)
    if best is None:
        raise KeyBudgetError(
            f"module {partition.module_index}: no detectable fault has "
            f"{key_budget} pattern bits to absorb"
        )
    return best


# -- the lock itself -------------------------------------------------------------


def _naming_token(nets) -> str:
    """Shortest token making the generated id families collision-free."""
    candidates = [""] + [f"u{i}_" for i in range(100)]
    for tok in candidates:
        bases = (f"{tok}rs", f"{tok}kg", f"{tok}tie", f"{tok}flt")
        if not any(n.startswith(bases) for n in nets):
            return tok
    raise LockingError("could not find a collision-free naming token")


def lock(
    netlist: Netlist, k: int, module_count: Optional[int] = None, seed: int = 0
) -> LockedDesign:
    """Lock a netlist with ``k`` key bits.

    The netlist is partitioned into ``module_count`` balanced random modules;
    the default of one module per two gates keeps module input counts low,
    which keeps the failing-pattern sets and hence the restore comparators
    small.  Each module gets the remainder-first share of the key budget, its
    cheapest detectable fault, and a restore fragment keyed on its slice of
    the key.  The composed result is checked equivalent to the original under
    the correct key before returning (exhaustively up to the input limit, by
    seeded sampling beyond it).
    """
    if k < 1:
        raise ValueError(f"k must be at least 1, got {k}")
    if any("regular" not in g.tags for g in netlist.gates):
        raise ValueError("netlist already carries locked-logic tags")
    regular = len(netlist.gates)
    if module_count is None:
        module_count = max(1, regular // 2)
    parts = partition_random_balanced(netlist, module_count, derive(seed, "partition"))
    budgets = [
        k // module_count + (1 if j < k % module_count else 0)
        for j in range(module_count)
    ]
    token = _naming_token(netlist.nets())
    gates = []
    records = []
    key_bits = []
    assignments = {}
    next_index = 0
    for part in parts:
        j = part.module_index
        sub = extract_module(netlist, part)
        fault, patterns = select_fault(netlist, part, budgets[j])
        simplified = inject_and_simplify(sub, fault)
        corrected = _corrected_outputs(patterns, sub.outputs)
        rename = {}
        faulty = {}
        dropped = set()
        for out in corrected:
            d = simplified.gate(out)
            if d.is_tie():
                faulty[out] = 1 if d.kind == "TIE1" else 0
                dropped.add(out)
            else:
                rename[out] = f"{token}flt{j}_{out}"
                faulty[out] = rename[out]
        for g in simplified.gates:
            if g.id in dropped:
                continue
            gid = rename.get(g.id, g.id)
            gates.append(
                Gate(gid, g.kind, tuple(rename.get(s, s) for s in g.inputs),
                     gid, g.tags)
            )
        indices = list(range(next_index, next_index + budgets[j]))
        next_index += budgets[j]
        build = build_restore(
            patterns,
            indices,
            derive(seed, f"mask.{j}"),
            inputs=sub.inputs,
            outputs=sub.outputs,
            faulty=faulty,
            prefix=f"{token}rs{j}_",
            tie_prefix=f"{token}tie",
            keygate_prefix=f"{token}kg",
        )
        gates.extend(build.gates)
        key_bits.extend(build.key_bits)
        for a in build.assignments:
            assignments[a.index] = a
        records.append(
            ModuleRecord(
                j,
                fault,
                tuple(patterns),
                tuple(indices),
                sub.inputs,
                sub.outputs,
                tuple(g.id for g in build.gates),
            )
        )
    locked = Netlist(
        f"{netlist.name}_locked", netlist.inputs, netlist.outputs, gates
    )
    design = LockedDesign(
        locked, Key(tuple(key_bits), assignments),
        netlist.inputs, netlist.outputs, tuple(records),
    )
    verdict = check_equivalence(
        netlist, locked, mode="auto", samples=10_000, seed=derive(seed, "lec")
    )
    if not verdict.equivalent:
        raise LockingError(
            f"locked netlist differs from the original under the correct key "
            f"at input {verdict.counterexample}"
        )
    return design


def apply_key(design: LockedDesign, bits) -> Netlist:
    """The locked netlist with tie cells set to an arbitrary key guess.

    The correct bits reproduce the netlist as built; any other assignment
    flips tie kinds and so miscorrects at least one module.  A zero-key
    design is returned unchanged.
    """
    bits = tuple(bits)
    if len(bits) != len(design.key.bits):
        raise ValueError(
            f"expected {len(design.key.bits)} key bits, got {len(bits)}"
        )
    if any(b not in (0, 1) for b in bits):
        raise ValueError("key bits must be 0 or 1")
    if bits == design.key.bits:
        return design.netlist
    kind_by_tie = {
        design.key.assignments[i].tie: ("TIE1" if bits[i] else "TIE0")
        for i in range(len(bits))
    }
    gates = [
        Gate(g.id, kind_by_tie[g.id], (), g.output, g.tags)
        if g.id in kind_by_tie
        else g
        for g in design.netlist.gates
    ]
    return Netlist(
        f"{design.netlist.name}~guess",
        design.netlist.inputs,
        design.netlist.outputs,
        gates,
    )


# -- persistence -----------------------------------------------------------------

_SIDECAR_FORMAT = 1


def _bits_str(bits) -> str:
    return "".join(str(b) for b in bits)


def _bits_tuple(s) -> tuple:
    return tuple(int(c) for c in s)


def save_locked_design(design: LockedDesign, bench_path, sidecar_path) -> None:
    """Write the locked netlist as BENCH plus a JSON sidecar.

    BENCH carries no role tags or key mapping, so the sidecar stores the key
    bits, the tie/key-gate assignments and the per-module records; loading
    re-derives every tag from it.
    """
    with open(bench_path, "w") as fh:
        fh.write(write_bench(design.netlist))
    doc = {
        "format": _SIDECAR_FORMAT,
        "name": design.netlist.name,
        "k": design.k,
        "key_bits": _bits_str(design.key.bits),
        "assignments": [
            {
                "index": a.index,
                "tie": a.tie,
                "key_gate": a.key_gate,
                "slot": a.slot,
            }
            for _, a in sorted(design.key.assignments.items())
        ],
        "original_inputs": list(design.original_inputs),
        "original_outputs": list(design.original_outputs),
        "modules": [
            {
                "index": r.index,
                "fault": {"net": r.fault.net, "stuck": r.fault.stuck_value},
                "inputs": list(r.inputs),
                "outputs": list(r.outputs),
                "key_indices": list(r.key_indices),
                "patterns": [
                    {
                        "inputs": _bits_str(p.inputs),
                        "error_mask": _bits_str(p.error_mask),
                    }
                    for p in r.patterns
                ],
                "restore_gates": list(r.restore_gates),
            }
            for r in design.module_records
        ],
    }
    with open(sidecar_path, "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_locked_design(bench_path, sidecar_path) -> LockedDesign:
    """Rebuild a :class:`LockedDesign` from BENCH plus sidecar, re-attaching
    the role tags the BENCH format cannot express."""
    with open(bench_path) as fh:
        text = fh.read()
    with open(sidecar_path) as fh:
        doc = json.load(fh)
    if doc.get("format") != _SIDECAR_FORMAT:
        raise LockingError(f"unsupported sidecar format {doc.get('format')!r}")
    netlist = parse_bench(text, name=doc["name"])
    assignments = {
        a["index"]: KeyAssignment(a["index"], a["tie"], a["key_gate"], a["slot"])
        for a in doc["assignments"]
    }
    restore = set()
    for m in doc["modules"]:
        restore.update(m["restore_gates"])
    keygates = {a.key_gate for a in assignments.values()}
    gates = []
    for g in netlist.gates:
        if g.id in keygates:
            gates.append(g.retagged({"key-gate"}))
        elif g.id in restore and not g.is_tie():
            gates.append(g.retagged({"restore-logic"}))
        else:
            gates.append(g)  # parser already tags tie kinds as tie-cell
    relabeled = Netlist(netlist.name, netlist.inputs, netlist.outputs, gates)
    records = []
    for m in doc["modules"]:
        n_out = len(m["outputs"])
        patterns = tuple(
            FailingPattern(_bits_tuple(p["inputs"]), _bits_tuple(p["error_mask"]))
            for p in m["patterns"]
        )
        for p in patterns:
            if len(p.error_mask) != n_out:
                raise LockingError("sidecar pattern width mismatch")
        records.append(
            ModuleRecord(
                m["index"],
                Fault(m["fault"]["net"], m["fault"]["stuck"]),
                patterns,
                tuple(m["key_indices"]),
                tuple(m["inputs"]),
                tuple(m["outputs"]),
                tuple(m["restore_gates"]),
            )
        )
    key = Key(_bits_tuple(doc["key_bits"]), assignments)
    if len(key.bits) != doc["k"]:
        raise LockingError("sidecar key length mismatch")
    return LockedDesign(
        relabeled,
        key,
        tuple(doc["original_inputs"]),
        tuple(doc["original_outputs"]),
        tuple(records),
    )

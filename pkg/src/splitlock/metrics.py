"""Security metrics: connection recovery, output corruption, net recovery.

Correct connection rate (CCR) scores an inferred secret edge-by-edge against
the truth.  It is reported three ways: over the broken regular connections,
over the key connections physically (the exact tie instance), and over the
key connections logically (any tie of the correct constant, which is what
functional recovery actually needs).  Key rates always divide by the full
key width, so unresolved key inputs count as misses.

Hamming distance and output error rate compare a recovered netlist against
the original function over an exhaustive sweep when the input count permits,
else over seeded samples.  Percentage of netlist recovery (PNR) is the
fraction of all gate-input connections of the locked netlist that the
recovered one reproduces; connections the split never broke count as
recovered.
"""

from __future__ import annotations

from dataclasses import dataclass

from .bench import Gate, Netlist
from .layout import BEOLSecret, FEOLView, in_pin, out_pin, parse_pin
from .locking import LockedDesign
from .sim import (
    EXHAUSTIVE_LIMIT,
    InterfaceMismatchError,
    _exhaustive_chunks,
    _sampled_inputs,
    simulate_batch,
)

__all__ = [
    "MetricsReport",
    "ccr",
    "error_stats",
    "hamming_distance",
    "oer",
    "aggregate_oer",
    "pnr",
    "recovered_netlist",
    "evaluate_attack",
]


@dataclass(frozen=True)
class MetricsReport:
    """One attack evaluation.  ``oer`` is per-run: did any probed input
    vector produce a wrong output."""

    ccr_regular: float
    ccr_key_physical: float
    ccr_key_logical: float
    hamming_distance: float
    oer: bool
    pnr: float
    n_broken_regular: int
    n_broken_key: int
    n_unresolved: int

    def to_dict(self) -> dict:
        return {
            "ccr_regular": self.ccr_regular,
            "ccr_key_physical": self.ccr_key_physical,
            "ccr_key_logical": self.ccr_key_logical,
            "hamming_distance": self.hamming_distance,
            "oer": self.oer,
            "pnr": self.pnr,
            "n_broken_regular": self.n_broken_regular,
            "n_broken_key": self.n_broken_key,
            "n_unresolved": self.n_unresolved,
        }


def ccr(secret, inferred, design: LockedDesign, feol: FEOLView):
    """(regular, key physical, key logical) correct connection rates.

    Regular CCR is judged over the broken non-key edges (100 when nothing
    regular broke).  Key rates are judged over all ``k`` key bits: a key
    input still visible in the front end (nothing hid it) resolves from the
    intact wiring, a broken one from the inferred edges.
    """
    true_edges = {s: d for d, s in secret.edges}
    inf_edges = {s: d for d, s in inferred.edges}
    key_pins = design.key_sink_pins()
    regular_sinks = [s for s in true_edges if s not in key_pins]
    reg_ok = sum(1 for s in regular_sinks if inf_edges.get(s) == true_edges[s])
    ccr_regular = 100.0 * reg_ok / len(regular_sinks) if regular_sinks else 100.0
    visible = {}
    kinds = {}
    for g in feol.gates:
        kinds[g.id] = g.kind
        for slot, src in enumerate(g.inputs):
            if src is not None:
                visible[in_pin(g.id, slot)] = out_pin(src)
    bits = design.key.bits
    phys = logical = 0
    for pin, index in key_pins.items():
        got = inf_edges.get(pin, visible.get(pin))
        if got is None:
            continue
        if got == out_pin(design.key.assignments[index].tie):
            phys += 1
        cell, _ = parse_pin(got)
        if kinds.get(cell) == ("TIE1" if bits[index] else "TIE0"):
            logical += 1
    k = len(bits)
    ccr_phys = 100.0 * phys / k if k else 100.0
    ccr_log = 100.0 * logical / k if k else 100.0
    return ccr_regular, ccr_phys, ccr_log


def error_stats(a: Netlist, b: Netlist, samples: int = 100_000, seed: int = 0):
    """(hamming distance percent, any difference seen) over an exhaustive
    sweep up to the input limit, else over seeded samples.  One sweep serves
    both statistics; prefer this over separate hamming_distance and oer
    calls when scoring many recoveries."""
    if set(a.inputs) != set(b.inputs) or set(a.outputs) != set(b.outputs):
        raise InterfaceMismatchError("netlist interfaces differ")
    n = len(a.inputs)
    diff_bits = 0
    vectors = 0
    if n <= EXHAUSTIVE_LIMIT:
        for _base, width, by_index in _exhaustive_chunks(n):
            values = {pi: by_index[j] for j, pi in enumerate(a.inputs)}
            va = simulate_batch(a, values, width)
            vb = simulate_batch(b, values, width)
            for po in a.outputs:
                diff_bits += (va[po] ^ vb[po]).bit_count()
            vectors += width
    else:
        by_index = _sampled_inputs(n, samples, seed)
        values = {pi: by_index[j] for j, pi in enumerate(a.inputs)}
        va = simulate_batch(a, values, samples)
        vb = simulate_batch(b, values, samples)
        for po in a.outputs:
            diff_bits += (va[po] ^ vb[po]).bit_count()
        vectors = samples
    hd = 100.0 * diff_bits / (vectors * len(a.outputs)) if a.outputs else 0.0
    return hd, diff_bits > 0


def hamming_distance(
    a: Netlist, b: Netlist, samples: int = 100_000, seed: int = 0
) -> float:
    """Percent of output bits that differ, averaged over probed vectors."""
    return error_stats(a, b, samples, seed)[0]


def oer(a: Netlist, b: Netlist, samples: int = 100_000, seed: int = 0) -> bool:
    """Whether any probed vector shows any output difference."""
    return error_stats(a, b, samples, seed)[1]


def aggregate_oer(flags) -> float:
    """Percent of runs whose recovered netlist erred on some probed vector."""
    flags = list(flags)
    if not flags:
        raise ValueError("no runs to aggregate")
    return 100.0 * sum(bool(f) for f in flags) / len(flags)


def pnr(locked: Netlist, recovered: Netlist) -> float:
    """Percent of the locked netlist's gate-input connections present in the
    recovered netlist.  Front-end-intact connections count as recovered;
    constant fills and wrong guesses count as misses."""
    total = 0
    ok = 0
    for g in locked.gates:
        total += len(g.inputs)
        if not recovered.has_gate(g.id):
            continue
        r = recovered.gate(g.id)
        for slot, src in enumerate(g.inputs):
            if slot < len(r.inputs) and r.inputs[slot] == src:
                ok += 1
    return 100.0 * ok / total if total else 100.0


def _fill_token(feol: FEOLView) -> str:
    names = {g.id for g in feol.gates} | set(feol.inputs)
    candidates = ["fill"] + [f"fill{c}_" for c in "abcdefgh"]
    for tok in candidates:
        if not any(n.startswith(tok) for n in names):
            return tok
    raise ValueError("could not find a collision-free fill prefix")


def recovered_netlist(feol: FEOLView, inferred) -> Netlist:
    """The attacker's manufactured netlist: front end plus inferred edges,
    with any still-open sink slot tied to a fresh constant-0 cell so the
    result is a complete, simulatable circuit."""
    assigned = {s: d for d, s in inferred.edges}
    token = _fill_token(feol)
    fills = []
    gates = []
    for g in feol.gates:
        ins = []
        for slot, src in enumerate(g.inputs):
            if src is not None:
                ins.append(src)
                continue
            dp = assigned.get(in_pin(g.id, slot))
            if dp is not None:
                cell, _ = parse_pin(dp)
                ins.append(cell)
            else:
                fid = f"{token}{len(fills)}"
                fills.append(
                    Gate(fid, "TIE0", (), fid, frozenset({"tie-cell"}))
                )
                ins.append(fid)
        gates.append(Gate(g.id, g.kind, tuple(ins), g.id, g.tags))
    return Netlist(
        f"{feol.name}_rec", feol.inputs, feol.outputs, fills + gates
    )


def evaluate_attack(
    original: Netlist,
    design: LockedDesign,
    feol: FEOLView,
    secret: BEOLSecret,
    inferred,
    samples: int = 100_000,
    seed: int = 0,
) -> MetricsReport:
    """Score one attack end to end against the original function."""
    recovered = recovered_netlist(feol, inferred)
    ccr_regular, ccr_phys, ccr_log = ccr(secret, inferred, design, feol)
    hd, differs = error_stats(original, recovered, samples, seed)
    key_pins = design.key_sink_pins()
    n_broken_key = sum(1 for _d, s in secret.edges if s in key_pins)
    return MetricsReport(
        ccr_regular=ccr_regular,
        ccr_key_physical=ccr_phys,
        ccr_key_logical=ccr_log,
        hamming_distance=hd,
        oer=differs,
        pnr=pnr(design.netlist, recovered),
        n_broken_regular=len(secret.edges) - n_broken_key,
        n_broken_key=n_broken_key,
        n_unresolved=len(inferred.unresolved),
    )

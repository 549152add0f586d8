"""Good-machine and faulty-machine logic simulation.

Simulation is bit-parallel: each net holds one arbitrary-precision integer
whose bit *i* is the net's value under input vector *i*.  A full exhaustive
sweep of a small module is a handful of integer operations per gate, which is
what makes per-fault failing-pattern enumeration cheap enough to run inside
the locking cost loop.

Vector indexing convention: input vector *v* (an integer) assigns bit
``(v >> j) & 1`` to the *j*-th primary input, so ``inputs[0]`` is the least
significant bit.  Failing patterns sort by this integer.

Everything here is pure and seeded; per-fault enumerations may be fanned out
across workers because each call owns its generator state.
"""

from __future__ import annotations

from dataclasses import dataclass
from random import Random
from typing import Optional

from .bench import Netlist, UndefinedNetError

__all__ = [
    "Fault",
    "FailingPattern",
    "EquivalenceVerdict",
    "ExhaustiveLimitError",
    "InterfaceMismatchError",
    "EXHAUSTIVE_LIMIT",
    "simulate",
    "simulate_faulty",
    "simulate_batch",
    "find_failing_patterns",
    "check_equivalence",
]

EXHAUSTIVE_LIMIT = 24  # inputs; past this, exhaustive sweeps are refused
_CHUNK_BITS = 18  # exhaustive sweeps run in 2**18-vector slices


class ExhaustiveLimitError(ValueError):
    """Exhaustive enumeration requested over too many inputs."""


class InterfaceMismatchError(ValueError):
    """Equivalence check between netlists with different PI/PO name sets."""


@dataclass(frozen=True)
class Fault:
    """A single stuck-at fault: ``net`` reads ``stuck_value`` regardless of
    its driver."""

    net: str
    stuck_value: int

    def __post_init__(self):
        if self.stuck_value not in (0, 1):
            raise ValueError(f"stuck_value must be 0 or 1, got {self.stuck_value}")

    def label(self) -> str:
        return f"{self.net}/sa{self.stuck_value}"


@dataclass(frozen=True)
class FailingPattern:
    """An input vector where faulty and good outputs differ.

    ``error_mask[j]`` is 1 when output ``j`` flips under this vector.  At
    least one bit is always set.
    """

    inputs: tuple
    error_mask: tuple

    def as_int(self) -> int:
        v = 0
        for j, bit in enumerate(self.inputs):
            v |= bit << j
        return v


@dataclass(frozen=True)
class EquivalenceVerdict:
    equivalent: bool
    counterexample: Optional[tuple]
    mode: str
    sample_count: Optional[int] = None


def _eval_gate(kind, srcs, full):
    if kind == "TIE0":
        return 0
    if kind == "TIE1":
        return full
    acc = srcs[0]
    if kind in ("AND", "NAND"):
        for s in srcs[1:]:
            acc &= s
        return full ^ acc if kind == "NAND" else acc
    if kind in ("OR", "NOR"):
        for s in srcs[1:]:
            acc |= s
        return full ^ acc if kind == "NOR" else acc
    if kind in ("XOR", "XNOR"):
        for s in srcs[1:]:
            acc ^= s
        return full ^ acc if kind == "XNOR" else acc
    if kind == "NOT":
        return full ^ acc
    return acc  # BUFF


def simulate_batch(netlist, input_values, width, fault=None):
    """Evaluate ``width`` vectors at once.

    Args:
        input_values: map of primary input id -> packed vector integer.
        width: number of parallel vectors (defines the truncation mask).
        fault: optional :class:`Fault`; the net is forced after its driver
            (or input assignment) evaluates.

    Returns a map net id -> packed values covering every net.
    """
    full = (1 << width) - 1
    values = {}
    for pi in netlist.inputs:
        values[pi] = input_values[pi] & full
    if fault is not None:
        if fault.net not in netlist.nets():
            raise UndefinedNetError(f"fault on undefined net {fault.net!r}")
        if fault.net in values:
            values[fault.net] = full if fault.stuck_value else 0
    for gid in netlist.topological_order():
        g = netlist.gate(gid)
        srcs = [values[s] for s in g.inputs]
        out = _eval_gate(g.kind, srcs, full)
        if fault is not None and g.output == fault.net:
            out = full if fault.stuck_value else 0
        values[g.output] = out
    return values


def _check_vector(netlist, inputs):
    if len(inputs) != len(netlist.inputs):
        raise ValueError(
            f"expected {len(netlist.inputs)} input bits, got {len(inputs)}"
        )
    if any(b not in (0, 1) for b in inputs):
        raise ValueError("input bits must be 0 or 1")


def simulate(netlist: Netlist, inputs) -> tuple:
    """Single-vector good-machine simulation; returns output bits in
    declaration order."""
    _check_vector(netlist, inputs)
    packed = {pi: b for pi, b in zip(netlist.inputs, inputs)}
    values = simulate_batch(netlist, packed, 1)
    return tuple(values[po] for po in netlist.outputs)


def simulate_faulty(netlist: Netlist, fault: Fault, inputs) -> tuple:
    """Single-vector simulation with one stuck-at fault injected."""
    _check_vector(netlist, inputs)
    packed = {pi: b for pi, b in zip(netlist.inputs, inputs)}
    values = simulate_batch(netlist, packed, 1, fault=fault)
    return tuple(values[po] for po in netlist.outputs)


# -- exhaustive and sampled sweeps ---------------------------------------------


def _exhaustive_chunks(n_inputs):
    """Yield (base_vector, width, input_values) slices covering all 2**n
    vectors.  Low inputs follow precomputed periodic masks; inputs at or
    above the chunk width are constant within a slice."""
    chunk_bits = min(n_inputs, _CHUNK_BITS)
    width = 1 << chunk_bits
    full = (1 << width) - 1
    periodic = []
    for j in range(chunk_bits):
        block = (1 << (1 << j)) - 1  # 2**j zeros then 2**j ones, repeated
        m = block << (1 << j)
        span = 1 << (j + 1)
        while span < width:
            m |= m << span
            span <<= 1
        periodic.append(m & full)
    for base in range(0, 1 << n_inputs, width):
        values = {}
        for j in range(n_inputs):
            if j < chunk_bits:
                values[j] = periodic[j]
            else:
                values[j] = full if (base >> j) & 1 else 0
        yield base, width, values


def _sampled_inputs(n_inputs, count, seed):
    rng = Random(seed)
    return {j: rng.getrandbits(count) for j in range(n_inputs)}


def _iter_set_bits(x):
    offset = 0
    while x:
        chunk = x & 0xFFFFFFFFFFFFFFFF
        while chunk:
            low = chunk & -chunk
            yield offset + low.bit_length() - 1
            chunk ^= low
        x >>= 64
        offset += 64


def find_failing_patterns(
    netlist: Netlist,
    fault: Fault,
    mode: str = "exhaustive",
    count: int = 1024,
    seed: int = 0,
) -> list:
    """Enumerate input vectors where the faulty machine disagrees.

    ``mode="exhaustive"`` sweeps all ``2**n`` vectors (n capped at
    ``EXHAUSTIVE_LIMIT``); ``mode="sampled"`` draws ``count`` seeded vectors,
    deduplicates, and keeps the failing ones.  Either way every returned
    pattern carries the recomputed per-output error mask and the list is
    sorted by input vector value, so the sampled result is always a subset of
    the exhaustive one.
    """
    n = len(netlist.inputs)
    patterns = []
    if mode == "exhaustive":
        if n > EXHAUSTIVE_LIMIT:
            raise ExhaustiveLimitError(
                f"{n} inputs exceeds the {EXHAUSTIVE_LIMIT}-input exhaustive limit"
            )
        for _base, width, by_index in _exhaustive_chunks(n):
            values = {pi: by_index[j] for j, pi in enumerate(netlist.inputs)}
            good = simulate_batch(netlist, values, width)
            bad = simulate_batch(netlist, values, width, fault=fault)
            _collect(netlist, values, good, bad, patterns)
    elif mode == "sampled":
        by_index = _sampled_inputs(n, count, seed)
        values = {pi: by_index[j] for j, pi in enumerate(netlist.inputs)}
        good = simulate_batch(netlist, values, count)
        bad = simulate_batch(netlist, values, count, fault=fault)
        raw = []
        _collect(netlist, values, good, bad, raw)
        seen = set()
        for p in raw:
            v = p.as_int()
            if v not in seen:
                seen.add(v)
                patterns.append(p)
        patterns.sort(key=FailingPattern.as_int)
    else:
        raise ValueError(f"mode must be 'exhaustive' or 'sampled', got {mode!r}")
    return patterns


def _collect(netlist, values, good, bad, out):
    diff_by_output = [good[po] ^ bad[po] for po in netlist.outputs]
    any_diff = 0
    for d in diff_by_output:
        any_diff |= d
    for i in _iter_set_bits(any_diff):
        bits = tuple((values[pi] >> i) & 1 for pi in netlist.inputs)
        mask = tuple((d >> i) & 1 for d in diff_by_output)
        out.append(FailingPattern(bits, mask))


# -- equivalence ---------------------------------------------------------------


def check_equivalence(
    a: Netlist,
    b: Netlist,
    mode: str = "auto",
    samples: int = 100_000,
    seed: int = 0,
) -> EquivalenceVerdict:
    """Compare two netlists over their shared interface.

    PI and PO names must match as sets; vectors follow ``a``'s input order
    and outputs are compared by name.  ``mode="auto"`` picks exhaustive up to
    ``EXHAUSTIVE_LIMIT`` inputs and Monte-Carlo beyond; the counterexample,
    when one exists, is the lowest-index differing vector of the sweep, so
    reruns reproduce it.
    """
    if set(a.inputs) != set(b.inputs):
        raise InterfaceMismatchError("primary input name sets differ")
    if set(a.outputs) != set(b.outputs):
        raise InterfaceMismatchError("primary output name sets differ")
    n = len(a.inputs)
    if mode == "auto":
        mode = "exhaustive" if n <= EXHAUSTIVE_LIMIT else "monte-carlo"
    if mode == "exhaustive":
        if n > EXHAUSTIVE_LIMIT:
            raise ExhaustiveLimitError(
                f"{n} inputs exceeds the {EXHAUSTIVE_LIMIT}-input exhaustive limit"
            )
        for base, width, by_index in _exhaustive_chunks(n):
            values = {pi: by_index[j] for j, pi in enumerate(a.inputs)}
            ce = _first_difference(a, b, values, width)
            if ce is not None:
                return EquivalenceVerdict(False, ce, "exhaustive")
        return EquivalenceVerdict(True, None, "exhaustive")
    if mode == "monte-carlo":
        by_index = _sampled_inputs(n, samples, seed)
        values = {pi: by_index[j] for j, pi in enumerate(a.inputs)}
        ce = _first_difference(a, b, values, samples)
        return EquivalenceVerdict(ce is None, ce, "monte-carlo", samples)
    raise ValueError(f"mode must be 'auto', 'exhaustive' or 'monte-carlo', got {mode!r}")


def _first_difference(a, b, values, width):
    va = simulate_batch(a, values, width)
    vb = simulate_batch(b, values, width)
    diff = 0
    for po in a.outputs:
        diff |= va[po] ^ vb[po]
    if diff == 0:
        return None
    i = (diff & -diff).bit_length() - 1
    return tuple((values[pi] >> i) & 1 for pi in a.inputs)

"""Attacks that guess the withheld back-end wiring from the front end.

The proximity attack exploits what placement leaks: a router prefers short
connections, so for every dangling sink the nearest dangling driver is a
good bet.  Candidate pairs are ranked globally by Euclidean pin distance and
greedily committed subject to what the attacker knows must hold: tie cells
drive exactly one load, regular drivers observe a fanout limit net of their
visible front-end loads, and no assignment may close a combinational loop.

The per-layer wirelength bounds are process design rules, so the attacker
also knows a regular connection only crosses the split when it is longer
than the split layer's bound: closer candidate pairs would have been routed
in the front end and are excluded.  Key inputs are exempt from that floor:
their nets are lifted by stacked vias regardless of length, and which sinks
are key inputs is visible from the role tags.

The key-gate postprocess encodes the other public fact: every key-gate's key
input is fed by some tie cell.  After matching, any key input left on a
regular driver (or on nothing) is rewired to a uniformly random tie cell
with remaining capacity.

The random-key attack is the reference guesser: it resolves every regular
connection correctly (taking them from the true secret) and matches key
inputs to tie cells uniformly at random, which is exactly the adversary the
key's masking construction is calibrated against.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from random import Random
from typing import Optional

from .layout import BEOLSecret, FEOLView, parse_pin
from .seeds import derive

__all__ = [
    "AttackConfig",
    "InferredSecret",
    "proximity_attack",
    "postprocess_keygates",
    "random_key_attack",
]

_TIE_KINDS = ("TIE0", "TIE1")
_KEY_SLOT = 1  # key-gates compare input 0 against the tie on input 1


@dataclass(frozen=True)
class AttackConfig:
    """Knobs of the proximity attack.

    ``max_fanout_regular`` caps total loads per regular driver (front-end
    loads count against it); ``tie_capacity`` is the loads a tie cell may
    drive, 1 under the single-fanout convention; ``avoid_loops`` rejects
    pairs that would create a combinational cycle; ``min_separation`` is the
    length floor applied to non-key sinks (None derives it from the view's
    split-layer wirelength bound, 0 disables it); ``keygate_postprocess``
    runs the tie rewiring pass after matching; ``seed`` feeds only that
    pass, the matching itself is deterministic.
    """

    max_fanout_regular: int = 16
    tie_capacity: int = 1
    avoid_loops: bool = True
    min_separation: Optional[float] = None
    keygate_postprocess: bool = True
    seed: int = 0


@dataclass(frozen=True)
class InferredSecret:
    """An attacker's guess at the withheld edges, same shape as the true
    secret, plus the sinks it could not resolve.  ``tie_capacity_exceeded``
    records that the postprocess had to ignore tie capacity."""

    edges: tuple
    unresolved: tuple
    tie_capacity_exceeded: bool = False

    def to_dict(self) -> dict:
        return {
            "edges": [list(e) for e in self.edges],
            "unresolved": list(self.unresolved),
            "tie_capacity_exceeded": self.tie_capacity_exceeded,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "InferredSecret":
        return cls(
            tuple((d, s) for d, s in doc["edges"]),
            tuple(doc["unresolved"]),
            doc.get("tie_capacity_exceeded", False),
        )


def _key_sink_pins(feol: FEOLView) -> list:
    gate_map = feol.gate_by_id()
    pins = []
    for s in feol.dangling_sinks:
        cell, _ = parse_pin(s.pin)
        if "key-gate" in gate_map[cell].tags and s.slot == _KEY_SLOT:
            pins.append(s.pin)
    return sorted(pins)


def _tie_driver_pins(feol: FEOLView) -> list:
    return sorted(d.pin for d in feol.dangling_drivers if d.kind in _TIE_KINDS)


def _length_floor(feol: FEOLView, config: AttackConfig) -> float:
    """Wirelength a broken non-key connection must exceed.  A connection no
    longer than the split layer's bound would have been routed in the front
    end, so such candidate pairs are impossible."""
    if config.min_separation is not None:
        return config.min_separation
    if 1 <= feol.split_layer <= len(feol.thresholds):
        return feol.thresholds[feol.split_layer - 1]
    return 0.0


def proximity_attack(feol: FEOLView, config: AttackConfig = None) -> InferredSecret:
    """Greedy globally-nearest completion of the dangling pins.

    All sink/driver pairs go into one heap keyed by (distance, sink pin,
    driver pin), so equal distances resolve lexicographically and reruns are
    identical.  Pairs whose bounding-box wirelength does not exceed the
    length floor are excluded up front for non-key sinks.  A popped pair is
    committed unless its sink is already matched, its driver is out of
    capacity, or (with ``avoid_loops``) the edge would close a cycle over
    the visible wiring plus guesses so far; capacity and loop checks reflect
    the attacker's bookkeeping, not the hidden truth.
    """
    config = config or AttackConfig()
    gate_map = feol.gate_by_id()
    capacity = {}
    for d in feol.dangling_drivers:
        limit = (
            config.tie_capacity
            if d.kind in _TIE_KINDS
            else config.max_fanout_regular
        )
        capacity[d.pin] = max(limit - d.feol_fanout, 0)
    floor = _length_floor(feol, config)
    exempt = set(_key_sink_pins(feol))
    heap = []
    for s in feol.dangling_sinks:
        for d in feol.dangling_drivers:
            if s.pin not in exempt:
                hpwl = abs(s.position[0] - d.position[0]) + abs(
                    s.position[1] - d.position[1]
                )
                if hpwl <= floor:
                    continue
            dist = math.dist(s.position, d.position)
            heap.append((dist, s.pin, d.pin))
    heapq.heapify(heap)
    succ = {}
    for g in feol.gates:
        for src in g.inputs:
            if src is not None:
                succ.setdefault(src, set()).add(g.id)

    def closes_loop(sink_cell, driver_cell):
        if driver_cell not in gate_map:
            return False  # primary inputs cannot be reached
        if not gate_map[driver_cell].inputs:
            return False  # source cells (ties) cannot be reached either
        stack = [sink_cell]
        seen = set()
        while stack:
            cell = stack.pop()
            if cell == driver_cell:
                return True
            if cell in seen:
                continue
            seen.add(cell)
            stack.extend(succ.get(cell, ()))
        return False

    assigned = {}
    while heap:
        _, sp, dp = heapq.heappop(heap)
        if sp in assigned or capacity[dp] <= 0:
            continue
        scell, _ = parse_pin(sp)
        dcell, _ = parse_pin(dp)
        if config.avoid_loops and closes_loop(scell, dcell):
            continue
        assigned[sp] = dp
        capacity[dp] -= 1
        succ.setdefault(dcell, set()).add(scell)
    unresolved = tuple(
        sorted(s.pin for s in feol.dangling_sinks if s.pin not in assigned)
    )
    result = InferredSecret(
        tuple(sorted((d, s) for s, d in assigned.items())), unresolved
    )
    if config.keygate_postprocess:
        result = postprocess_keygates(
            feol, result, derive(config.seed, "keygate-fix"), config.tie_capacity
        )
    return result


def postprocess_keygates(
    feol: FEOLView, inferred: InferredSecret, seed: int, tie_capacity: int = 1
) -> InferredSecret:
    """Rewire every key-gate key input to a tie cell.

    Key inputs whose guessed driver already is a tie keep it.  The rest
    (regular drivers and unresolved sinks) each draw a uniformly random tie
    with remaining capacity; when none is left, capacity is ignored and the
    result flagged.
    """
    gate_map = feol.gate_by_id()
    tie_pins = _tie_driver_pins(feol)
    edges = {s: d for d, s in inferred.edges}
    usage = {t: 0 for t in tie_pins}
    for d in edges.values():
        if d in usage:
            usage[d] += 1
    flagged = inferred.tie_capacity_exceeded
    rng = Random(seed)
    for sp in _key_sink_pins(feol):
        current = edges.get(sp)
        if current is not None:
            dcell, _ = parse_pin(current)
            if dcell in gate_map and gate_map[dcell].kind in _TIE_KINDS:
                continue
        if not tie_pins:
            break
        open_ties = [t for t in tie_pins if usage[t] < tie_capacity]
        if not open_ties:
            open_ties = tie_pins
            flagged = True
        pick = open_ties[rng.randrange(len(open_ties))]
        edges[sp] = pick
        usage[pick] += 1
    unresolved = tuple(
        sorted(s.pin for s in feol.dangling_sinks if s.pin not in edges)
    )
    return InferredSecret(
        tuple(sorted((d, s) for s, d in edges.items())), unresolved, flagged
    )


def random_key_attack(
    feol: FEOLView,
    secret: BEOLSecret,
    trials: int = 10_000,
    seed: int = 0,
    tie_capacity: int = 1,
) -> list:
    """Guess the key wiring uniformly at random, ``trials`` times.

    Regular broken edges are taken from the true secret (this attacker is
    assumed to fail only on the key), and the key inputs are matched to a
    random permutation of the tie-cell load slots.  Each trial derives its
    own generator, so any slice of the trial list reproduces independently
    of the others.
    """
    key_sinks = _key_sink_pins(feol)
    key_set = set(key_sinks)
    regular = [(d, s) for d, s in secret.edges if s not in key_set]
    tie_pins = _tie_driver_pins(feol)
    slots = [t for t in tie_pins for _ in range(tie_capacity)]
    if len(key_sinks) > len(slots):
        raise ValueError(
            f"{len(key_sinks)} key inputs but only {len(slots)} tie load slots"
        )
    results = []
    for t in range(trials):
        rng = Random(derive(seed, f"trial.{t}"))
        perm = slots[:]
        rng.shuffle(perm)
        edges = regular + [(perm[i], sp) for i, sp in enumerate(key_sinks)]
        results.append(InferredSecret(tuple(sorted(edges)), ()))
    return results

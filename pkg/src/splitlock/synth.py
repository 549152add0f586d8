"""Deterministic random combinational circuits with prescribed profiles.

The bundled large benchmarks are generated here: random gate-level circuits
matching the primary input, primary output and gate counts of the classic
ISCAS-85 circuits of the same number (c432, c880, c1355, c1908), whose
original netlists are not shipped.  The stand-ins carry an ``s`` suffix and
make no claim to the original logic; they exist so locking, layout and
attacks can be exercised at realistic scale from a clean checkout.  Anyone
holding the original BENCH files can run every tool on them directly.

Generation is forward and seeded.  Each new gate draws a kind and arity,
pulls inputs from recently created nets (for depth) and from the pool of
not-yet-consumed nets under a pressure that rises as the pool outgrows the
primary output budget, so the finished circuit has exactly the requested
counts and no dead logic: every net is eventually consumed or exported.
"""

from __future__ import annotations

from random import Random

from .bench import Netlist, Gate

__all__ = ["PROFILES", "random_circuit", "profile_circuit"]

# name -> (primary inputs, primary outputs, gates, seed)
PROFILES = {
    "c432s": (36, 7, 160, 432),
    "c880s": (60, 26, 383, 880),
    "c1355s": (41, 32, 546, 1355),
    "c1908s": (33, 25, 880, 1908),
}

_MULTI = ("NAND", "AND", "NOR", "OR", "XOR", "XNOR")
_MULTI_W = (28, 18, 12, 12, 12, 4)
_UNARY = ("NOT", "BUFF")
_UNARY_W = (12, 2)
_ARITY = (2, 3, 4)
_ARITY_W = (65, 25, 10)
_WINDOW = 60  # recent nets preferred as inputs, for depth over width


def random_circuit(
    name: str, n_inputs: int, n_outputs: int, n_gates: int, seed: int
) -> Netlist:
    """Generate a valid random circuit with exact interface and gate counts.

    Every gate's inputs come from already-created nets, so the result is
    acyclic by construction; the consumption pressure guarantees at most
    ``n_outputs`` nets are left unconsumed at the end, and those become the
    primary outputs (padded from the latest gates when fewer remain).
    """
    if n_inputs < 1 or n_outputs < 1 or n_gates < 1:
        raise ValueError("need at least one input, output and gate")
    if n_inputs - n_outputs > 3 * n_gates:
        raise ValueError("too few gates to consume the inputs")
    rng = Random(seed)
    inputs = [f"i{j + 1}" for j in range(n_inputs)]
    nets = list(inputs)
    born = {net: i for i, net in enumerate(nets)}
    unconsumed = set(inputs)
    gates = []
    for g in range(n_gates):
        gid = f"n{g + 1}"
        remaining = n_gates - g - 1
        excess = len(unconsumed) - n_outputs
        # consuming fewer than this many pool nets now would leave more
        # leftovers than the remaining gates could ever absorb (a 4-input
        # gate nets -3: it eats 4 and bears 1)
        must_consume = max(0, excess + 1 - 3 * remaining)
        if must_consume >= 2:
            kind = rng.choices(_MULTI, _MULTI_W)[0]
            arity = max(must_consume, rng.choices(_ARITY, _ARITY_W)[0])
        else:
            kind = rng.choices(_MULTI + _UNARY, _MULTI_W + _UNARY_W)[0]
            arity = 1 if kind in _UNARY else rng.choices(_ARITY, _ARITY_W)[0]
        arity = min(arity, len(nets))
        pressure = min(0.95, max(0.05, excess / (1.5 * remaining + 1)))
        chosen = []
        pool = sorted(unconsumed, key=born.__getitem__)
        for slot in range(arity):
            forced = slot < must_consume
            pick = None
            if pool and (forced or rng.random() < pressure):
                for _ in range(8):
                    cand = pool[rng.randrange(len(pool))]
                    if cand not in chosen:
                        pick = cand
                        break
            if pick is None and not forced:
                window = nets[-_WINDOW:]
                for _ in range(8):
                    cand = window[rng.randrange(len(window))]
                    if cand not in chosen:
                        pick = cand
                        break
            if pick is None:  # dense collisions: first unused net, newest first
                for cand in reversed(nets):
                    if cand not in chosen:
                        pick = cand
                        break
            chosen.append(pick)
        gates.append(Gate(gid, kind, tuple(chosen), gid))
        unconsumed.difference_update(chosen)
        nets.append(gid)
        born[gid] = len(nets) - 1
        unconsumed.add(gid)
    outs = sorted(unconsumed, key=born.__getitem__)
    if len(outs) > n_outputs:
        raise AssertionError("consumption pressure failed to drain the pool")
    for net in reversed(nets):
        if len(outs) == n_outputs:
            break
        if net not in unconsumed and net not in inputs:
            outs.append(net)
    outs.sort(key=born.__getitem__)
    return Netlist(name, inputs, outs, gates)


def profile_circuit(name: str) -> Netlist:
    """The bundled profile by name (``c432s``, ``c880s``, ...), regenerated
    from its fixed seed."""
    if name not in PROFILES:
        raise KeyError(f"unknown profile {name!r}; have {sorted(PROFILES)}")
    n_in, n_out, n_gates, seed = PROFILES[name]
    return random_circuit(name, n_in, n_out, n_gates, seed)

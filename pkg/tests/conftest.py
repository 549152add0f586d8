import pytest

from splitlock.bench import parse_bench
from splitlock.benchmarks import load_benchmark

C17_TEXT = """\
INPUT(1)
INPUT(2)
INPUT(3)
INPUT(6)
INPUT(7)
OUTPUT(22)
OUTPUT(23)
10 = NAND(1, 3)
11 = NAND(3, 6)
16 = NAND(2, 11)
19 = NAND(11, 7)
22 = NAND(10, 16)
23 = NAND(16, 19)
"""


@pytest.fixture
def c17():
    return load_benchmark("c17")


@pytest.fixture
def c17_text():
    return C17_TEXT


def naive_eval(netlist, assignment, fault=None):
    """Reference simulator: memoized recursion over drivers, one vector at a
    time.  Deliberately shares no code with the packed simulator."""
    memo = {}

    def value(net):
        if net in memo:
            return memo[net]
        if fault is not None and net == fault.net:
            memo[net] = fault.stuck_value
            return fault.stuck_value
        g = netlist.driver_of(net)
        if g is None:
            v = assignment[net]
        else:
            ins = [value(s) for s in g.inputs]
            if g.kind == "AND":
                v = int(all(ins))
            elif g.kind == "OR":
                v = int(any(ins))
            elif g.kind == "NAND":
                v = int(not all(ins))
            elif g.kind == "NOR":
                v = int(not any(ins))
            elif g.kind == "XOR":
                v = sum(ins) & 1
            elif g.kind == "XNOR":
                v = (sum(ins) & 1) ^ 1
            elif g.kind == "NOT":
                v = ins[0] ^ 1
            elif g.kind == "BUFF":
                v = ins[0]
            elif g.kind == "TIE0":
                v = 0
            elif g.kind == "TIE1":
                v = 1
            else:
                raise AssertionError(g.kind)
        memo[net] = v
        return v

    return tuple(value(po) for po in netlist.outputs)


def naive_truth_table(netlist, fault=None):
    """All output tuples of a small netlist, indexed by input vector with
    inputs[0] as the least significant bit."""
    rows = []
    for index in range(1 << len(netlist.inputs)):
        bits = vector_bits(index, len(netlist.inputs))
        assignment = dict(zip(netlist.inputs, bits))
        rows.append(naive_eval(netlist, assignment, fault))
    return rows


def vector_bits(index, width):
    return tuple((index >> j) & 1 for j in range(width))


@pytest.fixture
def tiny_chain():
    return parse_bench(
        """
        INPUT(a)
        OUTPUT(y)
        b = NOT(a)
        y = BUFF(b)
        """,
        name="chain",
    )

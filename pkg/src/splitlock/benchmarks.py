"""Bundled benchmark netlists.

``c17`` is the classic five-input, six-NAND circuit, shipped verbatim.  The
larger names (``c432s`` and friends) are the synthetic profile stand-ins
described in :mod:`splitlock.synth`; each matches the interface and gate
count of the classic circuit it is named after and is regenerated bit for
bit by ``profile_circuit``, which the test suite checks against the bundled
files.  Any command that accepts a benchmark name also accepts a path to a
BENCH file, so the real circuits can be used wherever they are available.
"""

from __future__ import annotations

from importlib import resources

from .bench import Netlist, parse_bench

__all__ = ["benchmark_names", "load_benchmark"]


def _store():
    return resources.files("splitlock").joinpath("netlists")


def benchmark_names() -> list:
    """Names of the bundled netlists, alphabetical."""
    return sorted(
        entry.name[: -len(".bench")]
        for entry in _store().iterdir()
        if entry.name.endswith(".bench")
    )


def load_benchmark(name: str) -> Netlist:
    """Load a bundled netlist by name."""
    path = _store().joinpath(f"{name}.bench")
    if not path.is_file():
        raise KeyError(
            f"no bundled benchmark {name!r}; have {benchmark_names()}"
        )
    return parse_bench(path.read_text(), name=name)

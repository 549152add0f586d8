import math

import pytest

from splitlock.attack import (
    AttackConfig,
    InferredSecret,
    postprocess_keygates,
    proximity_attack,
    random_key_attack,
)
from splitlock.layout import (
    BEOLSecret,
    DanglingDriver,
    DanglingSink,
    FEOLView,
    FeolGate,
    Placement,
    assign_layers,
    place,
    recombine,
    split,
)
from splitlock.benchmarks import load_benchmark
from splitlock.locking import lock

REGULAR = frozenset({"regular"})
KEYGATE = frozenset({"key-gate"})
TIECELL = frozenset({"tie-cell"})


def tie_gate(cell, kind="TIE0"):
    return FeolGate(cell, kind, (), TIECELL)


def make_view(gates, drivers, sinks, split_layer=1, thresholds=(2.0, math.inf)):
    return FEOLView(
        "toy",
        "secure",
        split_layer,
        tuple(thresholds),
        (),
        (),
        tuple(gates),
        tuple(drivers),
        tuple(sinks),
        Placement((16, 16), {}, frozenset()),
    )


def edges_of(result):
    return dict((s, d) for d, s in result.edges)


NO_FLOOR = AttackConfig(min_separation=0.0)


# -- greedy matching ---------------------------------------------------------------


def test_nearest_driver_wins():
    view = make_view(
        gates=[
            FeolGate("g1", "AND", (None, "p"), REGULAR),
            FeolGate("g2", "AND", (None, "p"), REGULAR),
        ],
        drivers=[
            DanglingDriver("da/O", (1, 0), "PI", 0),
            DanglingDriver("db/O", (9, 0), "PI", 0),
        ],
        sinks=[
            DanglingSink("g1/I0", (0, 0), "AND", 0),
            DanglingSink("g2/I0", (10, 0), "AND", 0),
        ],
    )
    result = proximity_attack(view, NO_FLOOR)
    assert edges_of(result) == {"g1/I0": "da/O", "g2/I0": "db/O"}
    assert result.unresolved == ()


def test_matching_is_globally_greedy():
    # the middle driver goes to the closer sink; the other sink must settle
    # for the remote driver even though the middle one is its nearest too
    view = make_view(
        gates=[
            FeolGate("g1", "AND", (None, "p"), REGULAR),
            FeolGate("g2", "AND", (None, "p"), REGULAR),
        ],
        drivers=[
            DanglingDriver("dm/O", (1, 0), "PI", 0),
            DanglingDriver("df/O", (10, 0), "PI", 0),
        ],
        sinks=[
            DanglingSink("g1/I0", (0, 0), "AND", 0),
            DanglingSink("g2/I0", (3, 0), "AND", 0),
        ],
    )
    config = AttackConfig(max_fanout_regular=1, min_separation=0.0)
    result = proximity_attack(view, config)
    assert edges_of(result) == {"g1/I0": "dm/O", "g2/I0": "df/O"}


def test_distance_is_euclidean():
    # straight-line distance prefers the diagonal driver (sqrt(8) < 3) even
    # though its bounding-box wirelength is larger (4 > 3)
    view = make_view(
        gates=[FeolGate("g1", "AND", (None, "p"), REGULAR)],
        drivers=[
            DanglingDriver("da/O", (3, 0), "PI", 0),
            DanglingDriver("db/O", (2, 2), "PI", 0),
        ],
        sinks=[DanglingSink("g1/I0", (0, 0), "AND", 0)],
    )
    result = proximity_attack(view, NO_FLOOR)
    assert edges_of(result) == {"g1/I0": "db/O"}


def test_equal_distances_break_lexicographically():
    view = make_view(
        gates=[FeolGate("g1", "AND", (None, "p"), REGULAR)],
        drivers=[
            DanglingDriver("db/O", (1, 0), "PI", 0),
            DanglingDriver("da/O", (0, 1), "PI", 0),
        ],
        sinks=[DanglingSink("g1/I0", (0, 0), "AND", 0)],
    )
    result = proximity_attack(view, NO_FLOOR)
    assert edges_of(result) == {"g1/I0": "da/O"}


def test_fanout_capacity_counts_feol_loads():
    view = make_view(
        gates=[FeolGate("g1", "AND", (None, "p"), REGULAR)],
        drivers=[DanglingDriver("da/O", (1, 0), "AND", 16)],
        sinks=[DanglingSink("g1/I0", (0, 0), "AND", 0)],
    )
    spent = proximity_attack(view, NO_FLOOR)
    assert spent.edges == ()
    assert spent.unresolved == ("g1/I0",)
    view = make_view(
        gates=[FeolGate("g1", "AND", (None, "p"), REGULAR)],
        drivers=[DanglingDriver("da/O", (1, 0), "AND", 15)],
        sinks=[DanglingSink("g1/I0", (0, 0), "AND", 0)],
    )
    result = proximity_attack(view, NO_FLOOR)
    assert edges_of(result) == {"g1/I0": "da/O"}


def test_tie_capacity_limits_matching():
    view = make_view(
        gates=[
            FeolGate("kg1", "XNOR", ("p", None), KEYGATE),
            FeolGate("kg2", "XNOR", ("p", None), KEYGATE),
            tie_gate("t1"),
        ],
        drivers=[DanglingDriver("t1/O", (1, 0), "TIE0", 0)],
        sinks=[
            DanglingSink("kg1/I1", (0, 0), "XNOR", 1),
            DanglingSink("kg2/I1", (2, 0), "XNOR", 1),
        ],
    )
    config = AttackConfig(min_separation=0.0, keygate_postprocess=False)
    result = proximity_attack(view, config)
    assert edges_of(result) == {"kg1/I1": "t1/O"}
    assert result.unresolved == ("kg2/I1",)
    assert not result.tie_capacity_exceeded


def test_postprocess_overflows_tie_capacity_when_cornered():
    view = make_view(
        gates=[
            FeolGate("kg1", "XNOR", ("p", None), KEYGATE),
            FeolGate("kg2", "XNOR", ("p", None), KEYGATE),
            tie_gate("t1"),
        ],
        drivers=[DanglingDriver("t1/O", (1, 0), "TIE0", 0)],
        sinks=[
            DanglingSink("kg1/I1", (0, 0), "XNOR", 1),
            DanglingSink("kg2/I1", (2, 0), "XNOR", 1),
        ],
    )
    result = proximity_attack(view, NO_FLOOR)
    assert edges_of(result) == {"kg1/I1": "t1/O", "kg2/I1": "t1/O"}
    assert result.unresolved == ()
    assert result.tie_capacity_exceeded


def test_loop_avoidance_skips_cyclic_pairs():
    gates = [
        FeolGate("g1", "AND", (None, "p"), REGULAR),
        FeolGate("g2", "BUFF", ("g1",), REGULAR),
    ]
    drivers = [
        DanglingDriver("g2/O", (1, 0), "BUFF", 0),
        DanglingDriver("pp/O", (3, 0), "PI", 0),
    ]
    sinks = [DanglingSink("g1/I0", (0, 0), "AND", 0)]
    careful = proximity_attack(make_view(gates, drivers, sinks), NO_FLOOR)
    assert edges_of(careful) == {"g1/I0": "pp/O"}
    reckless = proximity_attack(
        make_view(gates, drivers, sinks),
        AttackConfig(min_separation=0.0, avoid_loops=False),
    )
    assert edges_of(reckless) == {"g1/I0": "g2/O"}


def test_loop_avoidance_sees_committed_guesses():
    # after guessing g2 -> g1, the pair g1 -> g2 would close a cycle through
    # the guess itself, so the second sink must take the remote driver
    gates = [
        FeolGate("g1", "AND", (None, "p"), REGULAR),
        FeolGate("g2", "AND", (None, "p"), REGULAR),
    ]
    drivers = [
        DanglingDriver("g2/O", (1, 0), "AND", 0),
        DanglingDriver("g1/O", (3, 1), "AND", 0),
        DanglingDriver("pp/O", (6, 0), "PI", 0),
    ]
    sinks = [
        DanglingSink("g1/I0", (0, 0), "AND", 0),
        DanglingSink("g2/I0", (3, 0), "AND", 0),
    ]
    result = proximity_attack(make_view(gates, drivers, sinks), NO_FLOOR)
    assert edges_of(result) == {"g1/I0": "g2/O", "g2/I0": "pp/O"}


# -- the length floor --------------------------------------------------------------


def test_floor_excludes_short_regular_pairs():
    # a broken regular connection must be longer than the split layer's
    # bound, so the nearby driver is impossible and the far one wins
    view = make_view(
        gates=[FeolGate("g1", "AND", (None, "p"), REGULAR)],
        drivers=[
            DanglingDriver("da/O", (1, 0), "PI", 0),
            DanglingDriver("db/O", (5, 0), "PI", 0),
        ],
        sinks=[DanglingSink("g1/I0", (0, 0), "AND", 0)],
        split_layer=1,
        thresholds=(2.0, math.inf),
    )
    result = proximity_attack(view)
    assert edges_of(result) == {"g1/I0": "db/O"}


def test_floor_follows_split_layer():
    gates = [FeolGate("g1", "AND", (None, "p"), REGULAR)]
    drivers = [
        DanglingDriver("da/O", (3, 0), "PI", 0),
        DanglingDriver("db/O", (5, 0), "PI", 0),
    ]
    sinks = [DanglingSink("g1/I0", (0, 0), "AND", 0)]
    thresholds = (2.0, 4.0, math.inf)
    shallow = proximity_attack(make_view(gates, drivers, sinks, 1, thresholds))
    assert edges_of(shallow) == {"g1/I0": "da/O"}
    deep = proximity_attack(make_view(gates, drivers, sinks, 2, thresholds))
    assert edges_of(deep) == {"g1/I0": "db/O"}


def test_floor_exempts_key_inputs():
    view = make_view(
        gates=[FeolGate("kg1", "XNOR", ("p", None), KEYGATE), tie_gate("t1", "TIE1")],
        drivers=[DanglingDriver("t1/O", (1, 0), "TIE1", 0)],
        sinks=[DanglingSink("kg1/I1", (0, 0), "XNOR", 1)],
        split_layer=1,
        thresholds=(2.0, math.inf),
    )
    result = proximity_attack(view)
    assert edges_of(result) == {"kg1/I1": "t1/O"}


def test_key_gate_data_input_is_not_exempt():
    # only the key input slot is exempt; a broken data input on a key-gate
    # still observes the floor
    view = make_view(
        gates=[FeolGate("kg1", "XNOR", (None, "t"), KEYGATE)],
        drivers=[DanglingDriver("da/O", (1, 0), "PI", 0)],
        sinks=[DanglingSink("kg1/I0", (0, 0), "XNOR", 0)],
        split_layer=1,
        thresholds=(2.0, math.inf),
    )
    result = proximity_attack(
        view, AttackConfig(keygate_postprocess=False)
    )
    assert result.edges == ()
    assert result.unresolved == ("kg1/I0",)


def test_min_separation_overrides_derived_floor():
    view = make_view(
        gates=[FeolGate("g1", "AND", (None, "p"), REGULAR)],
        drivers=[DanglingDriver("da/O", (1, 0), "PI", 0)],
        sinks=[DanglingSink("g1/I0", (0, 0), "AND", 0)],
        split_layer=1,
        thresholds=(2.0, math.inf),
    )
    assert proximity_attack(view).unresolved == ("g1/I0",)
    forced = proximity_attack(view, AttackConfig(min_separation=0.0))
    assert edges_of(forced) == {"g1/I0": "da/O"}
    starved = proximity_attack(view, AttackConfig(min_separation=100.0))
    assert starved.unresolved == ("g1/I0",)


# -- key-gate postprocess ----------------------------------------------------------


def test_postprocess_rewires_regular_driver_to_tie():
    view = make_view(
        gates=[FeolGate("kg1", "XNOR", ("p", None), KEYGATE), tie_gate("t1")],
        drivers=[
            DanglingDriver("r/O", (1, 0), "AND", 0),
            DanglingDriver("t1/O", (5, 0), "TIE0", 0),
        ],
        sinks=[DanglingSink("kg1/I1", (0, 0), "XNOR", 1)],
    )
    raw = proximity_attack(
        view, AttackConfig(min_separation=0.0, keygate_postprocess=False)
    )
    assert edges_of(raw) == {"kg1/I1": "r/O"}
    fixed = proximity_attack(view, NO_FLOOR)
    assert edges_of(fixed) == {"kg1/I1": "t1/O"}
    assert not fixed.tie_capacity_exceeded


def test_postprocess_keeps_tie_guesses():
    view = make_view(
        gates=[
            FeolGate("kg1", "XNOR", ("p", None), KEYGATE),
            tie_gate("t1"),
            tie_gate("t2", "TIE1"),
        ],
        drivers=[
            DanglingDriver("t1/O", (1, 0), "TIE0", 0),
            DanglingDriver("t2/O", (5, 0), "TIE1", 0),
        ],
        sinks=[DanglingSink("kg1/I1", (0, 0), "XNOR", 1)],
    )
    for seed in range(5):
        result = proximity_attack(view, AttackConfig(seed=seed))
        assert edges_of(result) == {"kg1/I1": "t1/O"}


def test_postprocess_fills_unresolved_key_inputs():
    view = make_view(
        gates=[FeolGate("kg1", "XNOR", ("p", None), KEYGATE), tie_gate("t1")],
        drivers=[DanglingDriver("t1/O", (1, 0), "TIE0", 0)],
        sinks=[DanglingSink("kg1/I1", (0, 0), "XNOR", 1)],
    )
    bare = InferredSecret((), ("kg1/I1",))
    fixed = postprocess_keygates(view, bare, seed=3)
    assert edges_of(fixed) == {"kg1/I1": "t1/O"}
    assert fixed.unresolved == ()


def test_postprocess_seed_changes_the_draw():
    view = make_view(
        gates=[FeolGate("kg1", "XNOR", ("p", None), KEYGATE)]
        + [tie_gate(f"t{i}") for i in range(8)],
        drivers=[
            DanglingDriver(f"t{i}/O", (10 + i, 0), "TIE0", 0) for i in range(8)
        ],
        sinks=[DanglingSink("kg1/I1", (0, 0), "XNOR", 1)],
    )
    bare = InferredSecret((), ("kg1/I1",))
    picks = {
        edges_of(postprocess_keygates(view, bare, seed=s))["kg1/I1"]
        for s in range(24)
    }
    assert len(picks) > 1
    again = postprocess_keygates(view, bare, seed=7)
    assert postprocess_keygates(view, bare, seed=7) == again


# -- serialization -----------------------------------------------------------------


def test_inferred_secret_dict_roundtrip():
    inferred = InferredSecret(
        (("a/O", "b/I0"), ("t1/O", "kg1/I1")), ("c/I2",), True
    )
    assert InferredSecret.from_dict(inferred.to_dict()) == inferred


# -- the full flow on a real design ------------------------------------------------


@pytest.fixture(scope="module")
def attacked_c17():
    design = lock(load_benchmark("c17"), k=4, seed=11)
    placement = place(design, seed=2, mode="secure", moves_per_cell=20)
    layers = assign_layers(placement, design, split_layer=2, mode="secure")
    feol, secret = split(design, placement, layers)
    return design, feol, secret


def test_proximity_guess_is_well_formed(attacked_c17):
    design, feol, secret = attacked_c17
    result = proximity_attack(feol)
    sinks = {s.pin for s in feol.dangling_sinks}
    drivers = {d.pin for d in feol.dangling_drivers}
    guessed = edges_of(result)
    assert set(guessed) | set(result.unresolved) == sinks
    assert set(guessed).isdisjoint(result.unresolved)
    assert set(guessed.values()) <= drivers
    key_pins = set(design.key_sink_pins())
    tie_pins = {d.pin for d in feol.dangling_drivers if d.kind.startswith("TIE")}
    for pin in key_pins & set(guessed):
        assert guessed[pin] in tie_pins


def test_proximity_attack_is_deterministic(attacked_c17):
    _, feol, _ = attacked_c17
    assert proximity_attack(feol) == proximity_attack(feol)


def test_random_key_attack_fixes_regular_edges(attacked_c17):
    design, feol, secret = attacked_c17
    key_pins = set(design.key_sink_pins())
    true_regular = {(d, s) for d, s in secret.edges if s not in key_pins}
    trials = random_key_attack(feol, secret, trials=16, seed=5)
    tie_pins = {d.pin for d in feol.dangling_drivers if d.kind.startswith("TIE")}
    for t in trials:
        guessed = edges_of(t)
        assert {(d, s) for d, s in t.edges if s not in key_pins} == true_regular
        key_drivers = [guessed[s] for s in sorted(key_pins)]
        assert set(key_drivers) <= tie_pins
        assert len(set(key_drivers)) == len(key_drivers)
        assert t.unresolved == ()


def test_random_key_attack_trials_are_independent(attacked_c17):
    _, feol, secret = attacked_c17
    long = random_key_attack(feol, secret, trials=12, seed=9)
    short = random_key_attack(feol, secret, trials=5, seed=9)
    assert long[:5] == short
    assert len({t.edges for t in long}) > 1


def test_random_key_attack_needs_enough_ties():
    view = make_view(
        gates=[
            FeolGate("kg1", "XNOR", ("p", None), KEYGATE),
            FeolGate("kg2", "XNOR", ("p", None), KEYGATE),
            tie_gate("t1"),
        ],
        drivers=[DanglingDriver("t1/O", (1, 0), "TIE0", 0)],
        sinks=[
            DanglingSink("kg1/I1", (0, 0), "XNOR", 1),
            DanglingSink("kg2/I1", (2, 0), "XNOR", 1),
        ],
    )
    with pytest.raises(ValueError):
        random_key_attack(view, BEOLSecret(()), trials=1)


def test_random_guess_can_recombine(attacked_c17):
    design, feol, secret = attacked_c17
    (trial,) = random_key_attack(feol, secret, trials=1, seed=3)
    rebuilt = recombine(feol, BEOLSecret(trial.edges))
    assert rebuilt.inputs == design.netlist.inputs
    assert rebuilt.outputs == design.netlist.outputs

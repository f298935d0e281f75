import json

import eqdensity as eq


def test_canonical_structures():
    s = eq.structure("all-sizes")
    assert s.related(1, 2)
    assert not s.related(2, 3)
    assert s.members_of(4) == [3, 4, 5]
    ch = s.character(10)
    assert ch["counts"][1] == 1 and ch["counts"][2] == 1 and ch["counts"][3] == 1


def test_prefix_density_exact():
    assert eq.prefix_density(lambda x: x % 2 == 0, 9) == "1/2"
    assert eq.prefix_density(lambda x: True, 41) == "1/1"


def test_square_density_identity():
    rows = eq.square_density_sweep(lambda x: x % 3 == 0, 50)
    assert len(rows) == 50
    for d, d2 in rows:
        p, q = (int(t) for t in d.split("/"))
        p2, q2 = (int(t) for t in d2.split("/"))
        assert p * p * q2 == p2 * q * q


def test_extract_dense_subset_inside_oracle():
    plan = [(n + 1, n) for n in range(512)]
    oracle = eq.EnumerationOracle("identity", 512, plan)
    out = eq.extract_dense_subset(oracle)
    assert out["coverage"] >= 256
    member = out["member"]
    assert any(member)
    assert all(oracle.contains_at(i, 512) for i, m in enumerate(member) if m)


def test_build_12_schedule_counts():
    b = eq.build_12_density_q(["1/2", "3/8"])
    assert b["checkpoints"][0] * 1 // 2 == b["type1_counts"][0]
    s = b["structure"]
    assert s.related(0, 0)


def test_scenario_roundtrip_and_determinism():
    text = json.dumps(
        {
            "name": "pysmoke-square",
            "construction": "square-density",
            "horizon": 300,
            "oracles": ["identity", "evens", "squares"],
        }
    )
    r1 = eq.run_scenario_text(text)
    r2 = eq.run_scenario_text(text)
    assert r1.all_pass
    assert r1.json() == r2.json()
    assert len(r1.invariants) == 3


def test_validation_enumerates_problems():
    try:
        eq.run_scenario_text(json.dumps({"name": "bad!", "construction": "nope"}))
    except eq.ValidationError as e:
        msg = str(e)
        assert "unknown id" in msg and "name" in msg
    else:
        raise AssertionError("expected ValidationError")


def test_known_constructions():
    ids = eq.known_constructions()
    for needed in ("prop1", "thm4", "weak-coarse-iso", "s1-roundtrip"):
        assert needed in ids

import json
import math

import pytest

import mmflat


def test_generate_and_ball_mass():
    gs = mmflat.generate("segment", spacing=0.01)
    assert len(gs.space) == 100
    assert gs.space.total_mass == pytest.approx(1.0)
    mid = len(gs.space) // 2
    assert mmflat.ball_mass(gs.space, mid, 0.25) == pytest.approx(0.5, rel=0.05)


def test_tree_axioms_and_roundtrip(tmp_path):
    gs = mmflat.generate("segment", spacing=0.01)
    tree = mmflat.build_tree(gs.space)
    assert mmflat.verify_cube_axioms(gs.space, tree)["all_ok"]
    path = str(tmp_path / "tree.json")
    mmflat.save_tree(tree, path)
    again = mmflat.load_tree(path)
    assert len(again) == len(tree)
    assert again.k_min == tree.k_min


def test_coefficients_on_flat_segment():
    gs = mmflat.generate("segment", spacing=0.002)
    mid = len(gs.space) // 2
    assert mmflat.osc(gs.space, mid, 0.2) <= 0.1
    assert mmflat.alpha(gs.space, mid, 0.2)["value"] <= 0.1
    assert mmflat.md(gs.space, gs.chart, [0.25], 0.5) <= 0.05


def test_field_and_packing_verdict():
    gs = mmflat.generate("segment", spacing=0.005)
    tree = mmflat.build_tree(gs.space)
    field = mmflat.compute_field(gs.space, tree, "osc")
    assert field.kind == "osc"
    assert any(not e.unreliable for e in field.entries)
    report = mmflat.carleson_constant(tree, field, 0.3, 1)
    assert report["verdict"] in ("flat", "growing", "inconclusive")
    assert report["supremum"] >= 0.0


def test_rtilde_full_subset_passes():
    gs = mmflat.generate("segment", spacing=0.005)
    tree = mmflat.build_tree(gs.space)
    root = tree.level_cubes(tree.k_min)[0]
    result = mmflat.rtilde_check(gs.space, tree, root, [1] * len(gs.space), 0.1)
    assert result["pass"]
    assert result["mass"] == pytest.approx(result["root_mass"])


def test_transport_distance():
    points = [[0.0, 0.0], [3.0, 4.0]]
    value = mmflat.transport_distance(points, [1.0, 0.0], [0.0, 1.0], [100.0, 100.0])
    assert value == pytest.approx(5.0)


def test_snowflake_density_law():
    gs = mmflat.generate("snowflake", spacing=1e-3)
    assert gs.space.dim_n == 2
    x = len(gs.space) // 2
    r = 0.3
    assert mmflat.ball_mass(gs.space, x, r) == pytest.approx(2 * r * r, rel=0.02)


def test_pipeline_end_to_end(tmp_path):
    config = {
        "generator": {"kind": "segment", "spacing": 0.01},
        "coefficients": ["osc"],
        "eps": [0.1],
        "out": str(tmp_path / "out"),
    }
    config_path = tmp_path / "config.json"
    config_path.write_text(json.dumps(config))
    assert mmflat.run_pipeline(str(config_path)) == 0
    summary = json.loads((tmp_path / "out" / "summary.json").read_text())
    assert summary["tree"]["axioms_ok"] is True

import math

import numpy as np
import pytest

import terrafuse


def test_kernel_identities():
    assert terrafuse.sparse_kernel(0.0, 1.0) == pytest.approx(1.0, abs=1e-12)
    assert terrafuse.sparse_kernel(1.0, 1.0) == pytest.approx(0.0, abs=1e-12)
    assert terrafuse.sparse_kernel(0.5, 1.0) == pytest.approx(1.0 / 6.0, abs=1e-12)
    assert terrafuse.sparse_kernel(2.0, 1.0) == 0.0


def test_posterior_matches_precision_weighting():
    positions = [(0.0, 0.0), (0.0, 0.0)]
    mean, var = terrafuse.bgk_posterior(positions, [1.0, 2.0], [1.0, 1.0], (0.0, 0.0))
    assert mean == pytest.approx(1.5)
    assert var == pytest.approx(0.5)
    assert terrafuse.bgk_posterior([(5.0, 0.0)], [1.0], [1.0], (0.0, 0.0)) is None
    prior_only = terrafuse.bgk_posterior([(5.0, 0.0)], [1.0], [1.0], (0.0, 0.0), prior=(0.3, 2.0))
    assert prior_only == pytest.approx((0.3, 2.0))
    with pytest.raises(ValueError):
        terrafuse.bgk_posterior([(0.0, 0.0)], [1.0], [0.0], (0.0, 0.0))


def test_predictive_adds_variance():
    assert terrafuse.predictive(0.2, 0.01, 0.04) == pytest.approx((0.2, 0.05))


def test_config_round_trip():
    cfg = terrafuse.Config()
    assert cfg.get("cell_size") == "0.2"
    assert cfg.side_cells() == 400
    cfg.set("cell_size", "0.4")
    assert cfg.side_cells() == 200
    assert "cell_size" in terrafuse.Config.keys()
    with pytest.raises(ValueError):
        cfg.set("no_such_key", "1")


def test_flat_scene_pipeline():
    assert "flat" in terrafuse.scene_names()
    cfg = terrafuse.Config()
    cfg.set("map_size", "40")
    cfg.set("gt_radius", "30")  # disc covers the whole map
    frames = terrafuse.run_scene("flat", frames=2, config=cfg, seed=3)
    assert len(frames) == 2
    last = frames[-1]
    assert last["elevation"].shape == (200, 200)
    valid = last["valid"].astype(bool)
    assert valid.sum() > 1000
    assert np.abs(last["elevation"][valid]).max() < 0.1
    assert (last["labels"] == terrafuse.TRAVERSABLE).sum() > 500
    metrics = last["metrics"]
    assert metrics["P"] > 0.9
    assert metrics["E"] < 0.05
    assert math.isfinite(last["total_ms"])

"""End-to-end smoke tests for the python bindings."""

import json
import math

import pytest

import emdloss


def test_cross_entropy_uniform():
    r = emdloss.cross_entropy([0.5, 0.5], 0, eps=0.0)
    assert math.isclose(r.value, math.log(2.0), rel_tol=1e-14)
    assert r.grad == [-2.0, 0.0]


def test_one_hot_displacement():
    for c in (2, 4, 7):
        for j in range(c):
            p = [0.0] * c
            p[j] = 1.0
            for k in range(c):
                assert emdloss.emd2_ordered(p, k).value == abs(j - k)


def test_single_label_matches_oracle():
    p = [0.2, 0.5, 0.3]
    d = [[0.0, 1.0, 0.3], [1.0, 0.0, 0.5], [0.3, 0.5, 0.0]]
    fast = emdloss.emd_single_label(p, 1, d).value
    exact = emdloss.emd_exact(p, [0.0, 1.0, 0.0], d)
    assert math.isclose(fast, exact, abs_tol=1e-9)
    assert math.isclose(fast, 0.35, abs_tol=1e-12)


def test_hybrid_reduces_to_cross_entropy_at_lambda_zero():
    p = [0.3, 0.3, 0.4]
    d = emdloss.ordinal_matrix(3, normalized=True)
    h = emdloss.hybrid_loss(p, 2, d, lambda_=0.0)
    xe = emdloss.cross_entropy(p, 2, eps=1e-6)
    assert h.value == xe.value
    assert h.grad == xe.grad


def test_sinkhorn_close_to_oracle():
    p = [0.25, 0.25, 0.25, 0.25]
    d = emdloss.ordinal_matrix(4, normalized=True)
    approx = emdloss.sinkhorn_emd(p, 0, d, entropic_reg=0.01, iters=2000).value
    smoothed = [1e-3 / 4] * 4
    smoothed[0] += 1.0 - 1e-3
    exact = emdloss.emd_exact(p, smoothed, d)
    assert abs(approx - exact) <= 0.02 * exact


def test_ground_matrix_pipeline():
    features = [[0.1, 0.9], [0.15, 0.85], [0.5, 0.5], [0.55, 0.45], [0.9, 0.1], [0.95, 0.05]]
    labels = [0, 0, 1, 1, 2, 2]
    out = emdloss.learn_ground_matrix(features, labels, 3)
    d = out["d"]
    assert d[0][0] == 0.0
    assert d[0][1] == d[1][0]
    assert d[0][1] < d[0][2]  # further classes are further in feature space
    assert out["sdd"] > 0.0


def test_metrics():
    aem, aeo = emdloss.aem_aeo([0, 2, 4], [0, 3, 1])
    assert math.isclose(aem, 1 / 3)
    assert math.isclose(aeo, 2 / 3)
    assert emdloss.predict_class([0.5, 0.5]) == 0
    assert math.isclose(emdloss.spearman_rho([1, 2, 3, 4, 5], [1, 2, 3, 5, 4]), 0.9)


def test_discretize():
    labels, edges, centers = emdloss.discretize_scores([0.1, 0.2, 0.8, 0.9], 2)
    assert labels == [0, 0, 1, 1]
    assert centers == [pytest.approx(0.15), pytest.approx(0.85)]
    assert len(edges) == 1


def test_errors_map_to_python_exceptions():
    with pytest.raises(ValueError):
        emdloss.cross_entropy([0.5, 0.5], 7)
    with pytest.raises(ValueError):
        emdloss.discretize_scores([1.0, 1.0], 2)


def test_train_run_smoke(tmp_path):
    cfg = {
        "seed": 5,
        "net": {"hidden_sizes": [8]},
        "train": {"loss": "XEMD2", "epochs": 6, "learning_rate": 0.05, "batch_size": 16},
        "data": {
            "synthetic": {
                "num_classes": 4,
                "feature_dim": 6,
                "samples_per_class": 40,
                "noise_sigma": 0.4,
                "seed": 9,
            }
        },
    }
    result = emdloss.train_run(json.dumps(cfg), str(tmp_path))
    assert len(result["epochs"]) == 6
    # jump-start: no regularizer for the first four epochs
    for row in result["epochs"][:4]:
        assert row["loss_reg"] == 0.0
        assert row["lambda"] == 0.0
    assert result["lambda_fix_epoch"] == 4
    assert (tmp_path / "history.csv").exists()
    assert (tmp_path / "model.ckpt").exists()
    # determinism: a second run writes the identical history
    again = emdloss.train_run(json.dumps(cfg), str(tmp_path / "second"))
    assert again["epochs"] == result["epochs"]


def test_config_template_is_valid_json():
    cfg = json.loads(emdloss.config_template())
    assert "train" in cfg and "data" in cfg

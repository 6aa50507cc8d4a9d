"""End-to-end smoke tests for the python bindings."""

import json
import math
import os

import pytest

import dreamcc

HERE = os.path.dirname(os.path.abspath(__file__))
ROOT = os.path.dirname(os.path.dirname(HERE))


def test_version():
    assert dreamcc.__version__


def test_tensor_ops_and_autodiff():
    a = dreamcc.Tensor([2, 2], [1.0, 2.0, 3.0, 4.0], dtype="f64", requires_grad=True)
    b = dreamcc.Tensor([2, 2], [5.0, 6.0, 7.0, 8.0], dtype="f64")
    prod = dreamcc.matmul(a, b)
    assert prod.to_list() == [19.0, 22.0, 43.0, 50.0]

    loss = dreamcc.sum_all(dreamcc.mul(a, b))
    dreamcc.backward(loss)
    assert a.grad() == [5.0, 6.0, 7.0, 8.0]

    sm = dreamcc.softmax(dreamcc.Tensor([1, 3], [0.0, 1.0, 2.0], dtype="f64"))
    assert math.isclose(sum(sm.to_list()), 1.0, abs_tol=1e-12)


def test_dimension_errors_surface_as_python_exceptions():
    a = dreamcc.Tensor([2, 2], [1.0, 2.0, 3.0, 4.0])
    b = dreamcc.Tensor([3], [1.0, 2.0, 3.0])
    with pytest.raises(dreamcc.DimensionError):
        dreamcc.add(a, b)


def test_lambda_returns_hand_case():
    # H=2, r=[1,1], d=[1,1], bootstrap 2: V_2 = 2, V_1 = 1 + 0.05*2 + 0.95*2 = 3
    out = dreamcc.lambda_returns([1.0, 1.0], [1.0, 1.0], [7.0, 2.0], 0.95)
    assert out == pytest.approx([3.0, 2.0], abs=1e-12)


def test_straight_through_sample_is_onehot():
    logits = dreamcc.Tensor([2, 4], [0.1, 0.2, 0.3, 0.4, 1.0, -1.0, 0.0, 0.5],
                            dtype="f64", requires_grad=True)
    sample = dreamcc.sample_straight_through(logits, seed=7)
    rows = sample.to_list()
    assert all(v in (0.0, 1.0) for v in rows)
    assert sum(rows[:4]) == 1.0 and sum(rows[4:]) == 1.0


def test_kl_balanced_value_is_plain_kl():
    post = dreamcc.Tensor([2, 3], [0.5, -0.2, 0.1, 1.0, 0.0, -1.0],
                          dtype="f64", requires_grad=True)
    prior = dreamcc.Tensor([2, 3], [0.0, 0.0, 0.0, 0.3, 0.3, -0.3],
                           dtype="f64", requires_grad=True)
    loss, value = dreamcc.kl_balanced(post, prior, alpha=0.8)
    plain = dreamcc.kl_categorical(post, prior)
    assert loss.to_list() == pytest.approx(plain.to_list(), abs=1e-12)
    assert value.to_list() == pytest.approx(plain.to_list(), abs=1e-12)


def test_env_rollout_catch():
    env = dreamcc.make_env("catch", image_size=32, seed=0)
    assert env.discrete and env.action_dim == 3 and env.image_size == 32
    step = env.reset(seed=5)
    assert len(step["image"]) == 32 * 32
    assert all(-0.5 <= v <= 0.5 for v in step["image"])
    stay = [0.0, 1.0, 0.0]
    steps = 0
    while not step["terminal"]:
        step = env.step(stay)
        steps += 1
        assert steps <= 7
    assert steps == 7 and step["reward"] in (-1.0, 1.0)


def test_config_and_scores(tmp_path):
    cfg = dreamcc.load_config(os.path.join(ROOT, "configs", "catch_desk.cfg"),
                              ["seed=123"])
    assert cfg["task"] == "catch" and cfg["seed"] == "123"
    assert set(dreamcc.config_keys()) == set(cfg.keys())

    baselines = tmp_path / "baselines.csv"
    baselines.write_text(
        "game,random,gamer,record\n"
        "alpha,0,10,100\nbeta,-10,10,40\ngamma,5,10,10\n")
    scores = tmp_path / "scores"
    scores.mkdir()
    (scores / "s0.json").write_text(json.dumps({"alpha": 55, "beta": 15, "gamma": 7.5}))
    (scores / "s1.json").write_text(json.dumps({"alpha": 200, "beta": -10, "gamma": 10}))
    agg = dreamcc.aggregate_scores(str(baselines), str(scores), "gamer_median")
    assert agg == pytest.approx(0.5 * (1.25 + 1.0), abs=1e-12)
    assert dreamcc.normalize_score(20, -21, 21) == pytest.approx(41 / 42, abs=1e-12)


def test_tiny_training_run(tmp_path):
    run_dir = str(tmp_path / "run")
    result = dreamcc.train(
        os.path.join(ROOT, "configs", "catch_desk.cfg"),
        [
            f"output_dir={run_dir}",
            "total_env_steps=126", "prefill_steps=63", "eval_every=28",
            "eval_episodes=2", "checkpoint_every=100000", "early_stop=false",
            "batch_size=4", "sequence_length=8", "deter_units=16",
            "latent_vars=3", "latent_classes=4", "cnn_depth=4",
            "mlp_layers=1", "mlp_units=16", "horizon=4",
            "dataset_capacity=10000",
        ],
    )
    assert result["env_steps"] == 126
    assert result["run_dir"] == run_dir

    records = dreamcc.read_metrics(os.path.join(run_dir, "metrics.jsonl"))
    assert any("wm_loss" in r for r in records)
    assert any("eval_return" in r for r in records)

    report = dreamcc.evaluate_checkpoint(run_dir, episodes=3, seed=1)
    assert len(report["returns"]) == 3
    assert all(math.isfinite(r) for r in report["returns"])

import numpy as np
import pytest

import memegp


def test_convolve_and_pool():
    out = memegp.convolve(np.ones((3, 3)), [1.0] * 9)
    assert out.shape == (1, 1)
    assert out[0, 0] == 9.0
    assert memegp.pool(np.array([[1.0, 2.0], [3.0, 4.0]]))[0, 0] == 4.0


def test_program_round_trip():
    prog = memegp.Program.generate(seed=42, depth_min=2, depth_max=6)
    assert prog.is_valid()
    again = memegp.Program.parse(prog.to_sexpr())
    assert again == prog
    assert prog.to_dot().startswith("digraph")


def test_parse_error():
    with pytest.raises(memegp.ParseError):
        memegp.Program.parse("(agg-mean (input)")


def test_evaluate_mean():
    prog = memegp.Program.parse("(agg-mean (input) (window rect 0 0 1 1))")
    assert prog.evaluate(np.full((6, 6), 0.5)) == pytest.approx(0.5)
    assert prog.classify(np.full((6, 6), 0.5)) == 0


def test_grad_check():
    prog = memegp.Program.parse(
        "(agg-mean (convolve (input) (filter 0.5 0.2 0.1 0.3 0.9 0.4 0.2 0.6 0.7)) (window rect 0 0 1 1))"
    )
    res = memegp.grad_check(prog, np.random.default_rng(0).uniform(0.1, 1.0, (8, 8)), 1)
    assert res["parameters"] == 9
    assert res["max_rel_error"] < 1e-6


def test_train_on_synthetic_data():
    images, labels = memegp.synth_bright_quadrant(20, 16, 0.05, seed=3)
    assert len(images) == 40 and images[0].shape == (16, 16)
    result = memegp.train(images, labels, images, labels, mode="ls", seed=1, pop=40, gens=10)
    assert result["train_accuracy"] >= 0.9
    assert isinstance(result["best"], memegp.Program)
    assert len(result["history"]) >= 1

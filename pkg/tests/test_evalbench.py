import math

import numpy as np
import pytest

from apinet.ablation import REFERENCE, AblationCell, ablation_grid, format_report, run_ablation, run_tables
from apinet.checks import pipeline_loss, random_pair_problem
from apinet.evalbench import evaluate, oracle_forward
from apinet.model import ModelDims, init_params
from apinet.synthdata import SynthSpec, generate
from apinet.trainer import TrainConfig, train

DIMS = ModelDims(d_in=6, d=5, d_h=3, enc_hidden=7, n_classes=4)
TINY = TrainConfig(n_cl=3, n_im=2, epochs=2, freeze_epochs=1, episodes_per_epoch=1, d=6, d_h=2, enc_hidden=6)


@pytest.fixture(scope="module")
def tiny_data():
    return generate(SynthSpec(n_super=2, n_sub=3, d_in=5, n_train=4, n_test=3, seed=2))


class TestEvaluate:
    def test_zero_classifier_near_chance(self):
        ds = generate(SynthSpec())
        P = init_params(ModelDims(d_in=16, n_classes=24), None, np.random.default_rng(0))
        P["classifier.w"][:] = 0
        X, y = ds.test
        acc = evaluate(P, X, y)
        p = 1 / 24
        assert abs(acc - p) <= 3 * math.sqrt(p * (1 - p) / len(y))

    def test_perfect(self):
        # identity encoder and classifier on one-hot inputs
        eye = np.eye(4)
        P = {"encoder.w1": eye, "encoder.b1": np.zeros(4), "encoder.w2": eye, "encoder.b2": np.zeros(4),
             "classifier.w": 10 * eye, "classifier.b": np.zeros(4)}
        assert evaluate(P, np.eye(4), np.arange(4)) == 1.0

    def test_order_independent_and_pure(self):
        rng = np.random.default_rng(1)
        P = init_params(DIMS, None, rng)
        X, y = rng.normal(size=(30, 6)), rng.integers(0, 4, 30)
        perm = rng.permutation(30)
        a = evaluate(P, X, y)
        assert a == evaluate(P, X[perm], y[perm]) == evaluate(P, X, y)

    def test_ties_go_to_lowest_class(self):
        P = init_params(DIMS, None, np.random.default_rng(0))
        P["classifier.w"][:] = 0
        X = np.zeros((3, 6))
        assert evaluate(P, X, [0, 0, 0]) == 1.0 and evaluate(P, X, [1, 1, 1]) == 0.0

    def test_empty(self):
        with pytest.raises(ValueError):
            evaluate(init_params(DIMS), np.zeros((0, 6)), [])


class TestOracle:
    @pytest.mark.parametrize("mutual,gate", [
        ("sum", "pair"), ("product", "single"), ("subtract-square", "pair"), ("mlp", "single"),
        ("weight-attention", "pair"), ("individual", "pair"),
    ])
    def test_matches_pipeline(self, mutual, gate):
        prob = random_pair_problem(DIMS, mutual, n_pairs=3, seed=4, gate=gate)
        got = pipeline_loss(prob.params, prob, mutual, gate, 1.0, 0.05).item()
        ref = oracle_forward(prob.in1, prob.in2, prob.c1, prob.c2, prob.params, mutual, gate, 1.0, 0.05)
        assert abs(got - ref.total) < 1e-10

    def test_zero_model(self):
        P = {k: np.zeros_like(v) for k, v in init_params(DIMS, "mlp").items()}
        X = np.ones((2, 6))
        ref = oracle_forward(X, X, [0, 1], [2, 3], P, "mlp", "pair", lam=0.0)
        assert abs(ref.l_ce - 4 * math.log(4)) < 1e-12

    def test_lambda_zero(self):
        prob = random_pair_problem(DIMS, "mlp", n_pairs=2, seed=5)
        ref = oracle_forward(prob.in1, prob.in2, prob.c1, prob.c2, prob.params, "mlp", "pair", lam=0.0)
        assert ref.total == ref.l_ce

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            oracle_forward(np.ones((2, 6)), np.ones((1, 6)), [0, 1], [0], init_params(DIMS, "mlp"))


class TestAblationGrid:
    def test_row_structure(self):
        base = TrainConfig()
        t2 = ablation_grid(2, base, 24)
        assert [c.value for c in t2] == ["individual", "subtract-square", "sum", "product", "weight-attention", "mlp"]
        t3 = ablation_grid(3, base, 24)
        assert [(c.axis, c.value) for c in t3] == [("gate", "single"), ("gate", "pair"), ("loss", "ce"), ("loss", "ce+rk")]
        assert t3[2].config.lam == 0.0 and t3[3].config.lam == 1.0
        t4 = ablation_grid(4, base, 24)
        assert [c.value for c in t4] == ["random", "-D", "-S", "D-", "S-", "DD", "SD", "DS", "SS"]
        t5 = ablation_grid(5, base, 24)
        assert [c.axis for c in t5] == ["n_cl"] * 3 + ["n_im"] * 3 + ["n_cl,n_im"] * 3
        assert [c.value for c in t5] == ["3", "5", "8", "2", "3", "4", "6x5", "8x4", "11x3"]

    def test_every_row_has_a_reference(self):
        for t in (2, 3, 4, 5):
            for c in ablation_grid(t, TrainConfig(), 24):
                assert AblationCell(c.table, c.axis, c.value, c.config, ref_key=c.ref_key).reference is not None
        assert len(REFERENCE) == 6 + 4 + 9 + 9

    def test_unknown_table(self):
        with pytest.raises(ValueError):
            ablation_grid(7, TrainConfig())

    def test_median_is_order_statistic(self):
        cell = AblationCell(4, "pair_rule", "SS", TrainConfig(), accuracies=[0.3, 0.1, 0.2, 0.4])
        assert cell.median == 0.2


class TestRunAblation:
    def test_single_cell_matches_direct_train(self, tiny_data):
        grid = ablation_grid(4, TINY, tiny_data.n_classes)[-1:]
        (cell,) = run_ablation(grid, tiny_data, [3])
        _, metrics = train(TINY.replace(pair_rule="SS", seed=3), tiny_data)
        assert cell.accuracies == [metrics[-1].test_acc]

    def test_failure_recorded_and_rest_run(self, tiny_data):
        grid = ablation_grid(5, TINY, tiny_data.n_classes)
        # more classes per episode than the dataset has makes sampling fail
        grid[0].config = grid[0].config.replace(n_cl=50)
        cells = run_ablation(grid[:2], tiny_data, [0])
        assert 0 in cells[0].errors and cells[0].accuracies == []
        assert cells[1].accuracies and not cells[1].errors

    def test_csv_deterministic(self, tiny_data, tmp_path):
        for out in ("a", "b"):
            run_tables([3], TINY, tiny_data, [0, 1], tmp_path / out)
        a = (tmp_path / "a" / "ablation_table3.csv").read_bytes()
        assert a == (tmp_path / "b" / "ablation_table3.csv").read_bytes()
        lines = a.decode().splitlines()
        assert lines[0] == "table,axis,value,seed,test_acc"
        assert sum(",median," in l for l in lines) == 4 and len(lines) == 1 + 4 * 3
        report = (tmp_path / "a" / "ablation_summary.txt").read_text()
        assert "88.6" in report and format_report([]).startswith("table")

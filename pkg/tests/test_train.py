import numpy as np
import pytest

from region_mixup.augment import MixRecipe
from region_mixup.core import ConfigError, DivisibilityError, ParameterError, RngState
from region_mixup.data import Dataset, gen_synthetic, one_hot
from region_mixup.nn import PARAM_NAMES, Geometry, small_cnn_forward, soft_cross_entropy
from region_mixup.nn.checkpoint import encode_tensors
from region_mixup.train import (
    MetricsRow,
    TrainConfig,
    evaluate_accuracy,
    mean_loss,
    metrics_csv,
    mix_batch,
    new_model,
    train_iteration,
    train_run,
)

GEOM = Geometry(3, 8, 8, 3)


@pytest.fixture
def batch():
    rng = RngState(31)
    x = rng.uniform((6, 3, 8, 8)).astype(np.float32)
    return x, one_hot(rng.integers(3, size=6), 3)


def fresh_model(cfg):
    return new_model(cfg, GEOM, RngState(cfg.seed))


def ce(params, x, y):
    return float(soft_cross_entropy(small_cnn_forward(params, x), y))


class TestTrainIteration:
    def test_region_k1_equals_mixup(self, batch):
        for seed in range(5):
            region = TrainConfig(method="region", k=1, seed=seed)
            mixup = TrainConfig(method="mixup", seed=seed)
            _, l1 = train_iteration(fresh_model(region), batch, region, RngState(seed))
            _, l2 = train_iteration(fresh_model(mixup), batch, mixup, RngState(seed))
            assert l1 == l2

    def test_without_standard_ce_loss_is_mixed_term(self, batch):
        cfg = TrainConfig(method="region", k=2, standard_ce=False)
        model = fresh_model(cfg)
        _, loss = train_iteration(model, batch, cfg, RngState(3))
        xm, ym = mix_batch(*batch, cfg, RngState(3))
        assert loss == pytest.approx(ce(model.params, xm, ym), abs=1e-6)

    def test_forced_unit_lambdas_double_clean_loss(self, batch):
        cfg = TrainConfig(method="region", k=2, standard_ce=True)
        model = fresh_model(cfg)
        recipe = MixRecipe(2, (1.0,) * 4, tuple(np.roll(np.arange(6), s) for s in range(4)))
        _, loss = train_iteration(model, batch, cfg, RngState(0), recipe=recipe)
        clean = float(soft_cross_entropy(small_cnn_forward(model.params, batch[0]), batch[1]))
        assert loss == 2 * clean

    @pytest.mark.parametrize("method", ["region", "mixup", "cutmix"])
    def test_loss_decomposition(self, batch, method):
        cfg = TrainConfig(method=method, k=2, standard_ce=True)
        model = fresh_model(cfg)
        _, loss = train_iteration(model, batch, cfg, RngState(8))
        xm, ym = mix_batch(*batch, cfg, RngState(8))
        expected = ce(model.params, *batch) + ce(model.params, xm, ym)
        assert abs(loss - expected) <= 1e-6

    def test_none_method_is_plain_ce(self, batch):
        cfg = TrainConfig(method="none")
        model = fresh_model(cfg)
        _, loss = train_iteration(model, batch, cfg, RngState(0))
        assert loss == pytest.approx(ce(model.params, *batch), abs=1e-7)

    def test_updates_params_and_step(self, batch):
        cfg = TrainConfig(method="region")
        model = fresh_model(cfg)
        new, _ = train_iteration(model, batch, cfg, RngState(0))
        assert new.step == 1
        assert any(not np.array_equal(new.params[n], model.params[n]) for n in PARAM_NAMES)

    def test_divisibility_propagates(self, batch):
        cfg = TrainConfig(method="region", k=3)
        with pytest.raises(DivisibilityError):
            train_iteration(fresh_model(cfg), batch, cfg, RngState(0))


class _ConstantModel:
    """Parameters making every logit row favour one class."""

    @staticmethod
    def params(winner, geom=GEOM):
        from region_mixup.nn import init_params

        p = {n: np.zeros_like(v) for n, v in init_params(RngState(0), geom).items()}
        p["fc.b"][winner] = 1.0
        return p


class TestEvaluate:
    def test_all_correct(self):
        ds = Dataset(np.zeros((5, 3, 8, 8), np.float32), np.zeros(5, np.int64), 3)
        assert evaluate_accuracy(_ConstantModel.params(0), ds) == 1.0

    def test_all_wrong(self):
        ds = Dataset(np.zeros((5, 3, 8, 8), np.float32), np.full(5, 2), 3)
        assert evaluate_accuracy(_ConstantModel.params(0), ds) == 0.0

    def test_ties_go_to_lowest_index(self):
        params = _ConstantModel.params(0)
        params["fc.b"][:] = 0.0
        ds = Dataset(np.zeros((4, 3, 8, 8), np.float32), np.zeros(4, np.int64), 3)
        assert evaluate_accuracy(params, ds) == 1.0

    def test_matches_hand_loop(self):
        rng = RngState(40)
        ds = Dataset(rng.uniform((100, 3, 8, 8)).astype(np.float32), rng.integers(3, size=100), 3)
        params = new_model(TrainConfig(), GEOM, RngState(41)).params
        correct = 0
        for i in range(100):
            logits = small_cnn_forward(params, ds.images[i:i + 1])[0]
            best = 0
            for c in range(1, 3):
                if logits[c] > logits[best]:
                    best = c
            correct += best == ds.labels[i]
        assert evaluate_accuracy(params, ds) == correct / 100

    def test_empty(self):
        ds = Dataset(np.zeros((0, 3, 8, 8), np.float32), np.zeros(0, np.int64), 3)
        with pytest.raises(ParameterError):
            evaluate_accuracy(_ConstantModel.params(0), ds)


@pytest.fixture(scope="module")
def tiny_sets():
    return gen_synthetic(96, 8, RngState(1)), gen_synthetic(40, 8, RngState(2))


class TestTrainRun:
    def test_zero_epochs(self, tiny_sets):
        cfg = TrainConfig(epochs=0, seed=4)
        model, rows = train_run(cfg, *tiny_sets)
        assert rows == []
        expected = new_model(cfg, Geometry(3, 8, 8, 2), RngState(4).split(2)[0])
        assert all(np.array_equal(model.params[n], expected.params[n]) for n in PARAM_NAMES)

    def test_deterministic_checkpoint(self, tiny_sets):
        cfg = TrainConfig(method="region", k=2, epochs=2, batch_size=32, seed=5)
        (m1, r1), (m2, r2) = train_run(cfg, *tiny_sets), train_run(cfg, *tiny_sets)
        assert encode_tensors(m1.params) == encode_tensors(m2.params)
        assert [(r.train_loss, r.test_acc) for r in r1] == [(r.train_loss, r.test_acc) for r in r2]

    def test_rows(self, tiny_sets):
        cfg = TrainConfig(method="cutmix", epochs=2, batch_size=40, seed=1)
        model, rows = train_run(cfg, *tiny_sets)
        assert [r.epoch for r in rows] == [0, 1]
        assert all(0 <= r.test_acc <= 1 and r.train_loss >= 0 and r.seconds >= 0 for r in rows)
        # 96 samples in batches of 40: three iterations per epoch
        assert model.step == 6

    def test_lr_schedule_applied(self, tiny_sets):
        cfg = TrainConfig(method="none", epochs=3, batch_size=96, lr_milestones=(1, 2), base_lr=0.1)
        model, _ = train_run(cfg, *tiny_sets)
        assert model.opt.lr == pytest.approx(0.001)

    def test_config_errors_before_training(self, tiny_sets):
        with pytest.raises(ConfigError):
            train_run(TrainConfig(method="bogus"), *tiny_sets)
        with pytest.raises(ConfigError):
            train_run(TrainConfig(alpha=0.0), *tiny_sets)
        with pytest.raises(DivisibilityError):
            train_run(TrainConfig(method="region", k=3), *tiny_sets)

    def test_loss_decreases(self, tiny_sets):
        for method in ("none", "mixup", "cutmix", "region"):
            cfg = TrainConfig(method=method, epochs=4, batch_size=16, seed=2, augment="crop")
            model, _ = train_run(cfg, *tiny_sets)
            initial = new_model(cfg, Geometry(3, 8, 8, 2), RngState(2).split(2)[0])
            assert mean_loss(model, tiny_sets[0]) < mean_loss(initial, tiny_sets[0]), method


def test_metrics_csv_format():
    rows = [MetricsRow(0, 1.23456789, 0.5, 12.3456789), MetricsRow(1, 0.000123456789, 1.0, 3.0)]
    assert metrics_csv(rows) == "epoch,train_loss,test_acc,seconds\n0,1.23457,0.5,0\n1,0.000123457,1,0\n"
    assert metrics_csv(rows, timing=True).splitlines()[1] == "0,1.23457,0.5,12.3457"

import numpy as np
import pytest
from scipy.linalg import hadamard

from qentrec import cnn
from qentrec.cnn import NetworkConfig, TrainConfig, TrainingDivergedError
from qentrec.imaging import FormatError, StatImage

from conftest import numeric_grad, rel_err

TINY = dict(conv1_maps=4, conv2_maps=2, kernel1=(2, 3), stride1=(1, 1), kernel2=(2, 3), stride2=(1, 1),
            hidden_units=5)


def tiny_config(n_out=3, **kw):
    return NetworkConfig((3, 16), n_out, **{**TINY, **kw})


def random_images(rng, n, W=3, D=16):
    x = rng.random((n, W, D))
    return x / x.sum(axis=-1, keepdims=True)


def test_walsh_hadamard():
    x = np.random.default_rng(0).random((2, 3, 16))
    assert np.allclose(cnn.walsh_hadamard(x), x @ hadamard(16).T, atol=1e-13)


def test_paper_layer_shapes():
    cfg = NetworkConfig((5, 256), 4)
    assert cfg.layer_shapes() == {"conv1": (3, 62), "pool1": (3, 31), "conv2": (2, 14), "pool2": (2, 7)}
    assert cfg.flat_size == 448
    with pytest.raises(ValueError):
        NetworkConfig((2, 16), 4)


class TestInit:
    def test_seeded(self):
        a, b = cnn.init_params(tiny_config(), 5), cnn.init_params(tiny_config(), 5)
        assert all(np.array_equal(a.tensors[k], b.tensors[k]) for k in a.tensors)

    def test_bounds(self):
        p = cnn.init_params(NetworkConfig((5, 64), 4), 1)
        for name, t in p.tensors.items():
            if name.endswith("_b"):
                assert not t.any()
            else:
                assert np.abs(t).max() <= np.sqrt(6 / np.prod(t.shape[:-1]))

    def test_untrained_chance(self):
        rng = np.random.default_rng(3)
        n_out = 4
        images = random_images(rng, 2000)
        labels = np.tile(np.arange(1, n_out + 1), 500)
        pred = cnn.predict_bin(cnn.init_params(tiny_config(n_out), 2), images)
        assert abs(np.mean(pred == labels) - 1 / n_out) < 0.05


class TestForward:
    def setup_method(self):
        self.rng = np.random.default_rng(7)
        self.params = cnn.init_params(tiny_config(), 1)

    def test_simplex(self):
        p = cnn.forward(self.params, random_images(self.rng, 20))
        assert np.all(p >= 0) and np.allclose(p.sum(axis=1), 1)

    def test_zero_image_bias_only(self):
        params = self.params.copy()
        for name in ("conv1_b", "conv2_b", "dense_b", "out_b"):
            params.tensors[name][:] = self.rng.normal(size=params.tensors[name].shape)
        base = cnn.forward(params, np.zeros((3, 16)))
        # scrambling every weight that multiplies the input changes nothing for a zero image
        params.tensors["conv1_w"] = self.rng.normal(size=params.tensors["conv1_w"].shape)
        assert np.allclose(cnn.forward(params, np.zeros((3, 16))), base, atol=1e-15)

    def test_batch_equals_single(self):
        imgs = random_images(self.rng, 6)
        batch = cnn.forward(self.params, imgs)
        for i in range(6):
            assert np.abs(cnn.forward(self.params, imgs[i]) - batch[i]).max() < 1e-12
        assert np.allclose(cnn.forward(self.params, StatImage(imgs[0])), batch[0])

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            cnn.forward(self.params, np.zeros((4, 16)))


class TestPredict:
    def test_matches_argmax(self):
        rng = np.random.default_rng(0)
        params = cnn.init_params(tiny_config(5), 0)
        imgs = random_images(rng, 30)
        assert np.array_equal(cnn.predict_bin(params, imgs), np.argmax(cnn.forward(params, imgs), axis=1) + 1)
        assert np.array_equal(cnn.predict_bins_batched(params, imgs, batch_size=7), cnn.predict_bin(params, imgs))

    def test_one_hot_output(self):
        params = cnn.init_params(tiny_config(4), 0)
        params.tensors["out_w"][:] = 0
        params.tensors["out_b"][:] = [0, 0, 5, 0]
        assert cnn.predict_bin(params, np.full((3, 16), 1 / 16)) == 3

    def test_monotone_rescaling(self):
        rng = np.random.default_rng(1)
        params = cnn.init_params(tiny_config(4), 0)
        imgs = random_images(rng, 20)
        before = cnn.predict_bin(params, imgs)
        params.tensors["out_w"] *= 3.0
        params.tensors["out_b"] = 3.0 * params.tensors["out_b"] + 0.0
        assert np.array_equal(cnn.predict_bin(params, imgs), before)


class TestGradients:
    @pytest.mark.parametrize("seed,n_out,preprocess", [(0, 3, "walsh_power"), (1, 3, "scaled"), (2, 5, "walsh_power")])
    def test_finite_difference(self, seed, n_out, preprocess):
        rng = np.random.default_rng(seed)
        params = cnn.init_params(tiny_config(n_out, preprocess=preprocess), seed)
        for name in ("conv1_b", "conv2_b", "dense_b", "out_b"):
            params.tensors[name][:] = 0.1 * rng.normal(size=params.tensors[name].shape)
        images = random_images(rng, 4)
        labels = rng.integers(1, n_out + 1, size=4)
        _, analytic = cnn.loss_and_grad(params, images, labels)
        numeric = numeric_grad(params, images, labels)
        for name in params.tensors:
            assert rel_err(analytic[name], numeric[name]) < 1e-4, name

    def test_perfect_prediction_zero_loss(self):
        params = cnn.init_params(tiny_config(3), 0)
        params.tensors["out_w"][:] = 0
        params.tensors["out_b"][:] = [1000.0, 0, 0]
        loss, _ = cnn.loss_and_grad(params, random_images(np.random.default_rng(0), 5), np.ones(5, int))
        assert loss == 0.0

    def test_descent_step(self):
        rng = np.random.default_rng(4)
        params = cnn.init_params(tiny_config(3), 4)
        images, labels = random_images(rng, 16), rng.integers(1, 4, size=16)
        loss0, g = cnn.loss_and_grad(params, images, labels)
        for k in params.tensors:
            params.tensors[k] -= 1e-3 * g[k]
        loss1, _ = cnn.loss_and_grad(params, images, labels)
        assert loss1 < loss0

    def test_label_range(self):
        params = cnn.init_params(tiny_config(3), 0)
        with pytest.raises(ValueError):
            cnn.loss_and_grad(params, random_images(np.random.default_rng(0), 2), [0, 1])
        with pytest.raises(ValueError):
            cnn.loss_and_grad(params, random_images(np.random.default_rng(0), 2), [1, 4])


def toy_task(n=400, seed=0):
    """Two classes of flat images, dim (0.5/D) versus bright (1.5/D)."""
    rng = np.random.default_rng(seed)
    labels = rng.integers(1, 3, size=n)
    images = np.where(labels[:, None, None] == 1, 0.5, 1.5) * np.ones((n, 3, 16)) / 16
    return images, labels


class TestTraining:
    def test_separable_toy(self):
        images, labels = toy_task()
        params = cnn.init_params(tiny_config(2), 0)
        _, tlog = cnn.train(params, images, labels, TrainConfig(epochs=5, learning_rate=1e-2, batch_size=16))
        assert max(r["val_accuracy"] for r in tlog.rows) == 1.0

    def test_deterministic_log(self):
        images, labels = toy_task(120)
        runs = [cnn.train(cnn.init_params(tiny_config(2), 0), images, labels, TrainConfig(epochs=2)) for _ in range(2)]
        assert runs[0][1].to_csv_rows() == runs[1][1].to_csv_rows()
        assert all(np.array_equal(runs[0][0].tensors[k], runs[1][0].tensors[k]) for k in runs[0][0].tensors)

    def test_divergence(self):
        images, labels = toy_task(64)
        params = cnn.init_params(tiny_config(2), 0)
        params.tensors["out_b"][:] = np.nan
        with pytest.raises(TrainingDivergedError):
            cnn.train(params, images, labels, TrainConfig(epochs=1))

    def test_config_validation(self):
        with pytest.raises(ValueError):
            TrainConfig(learning_rate=0)
        with pytest.raises(ValueError):
            TrainConfig(validation_fraction=0.9)


class TestParamFiles:
    def test_round_trip(self, tmp_path):
        params = cnn.init_params(tiny_config(3), 8)
        cnn.save_params(params, tmp_path / "p.qern")
        back = cnn.load_params(tmp_path / "p.qern", expected_config=params.config)
        assert back.config == params.config
        assert all(np.array_equal(back.tensors[k], params.tensors[k]) for k in params.tensors)

    def test_corrupted(self, tmp_path):
        cnn.save_params(cnn.init_params(tiny_config(3), 8), tmp_path / "p.qern")
        data = bytearray((tmp_path / "p.qern").read_bytes())
        data[-20] ^= 4
        (tmp_path / "p.qern").write_bytes(bytes(data))
        with pytest.raises(FormatError):
            cnn.load_params(tmp_path / "p.qern")

    def test_config_mismatch(self, tmp_path):
        cnn.save_params(cnn.init_params(tiny_config(3), 8), tmp_path / "p.qern")
        with pytest.raises(FormatError):
            cnn.load_params(tmp_path / "p.qern", expected_config=tiny_config(4))

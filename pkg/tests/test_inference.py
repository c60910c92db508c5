import math

import numpy as np
import pytest

from src.core.errors import ArtifactError, DimensionMismatchError, DivergenceError, EmptySplitError, NonFiniteInputError
from src.demos import FeatureStats, feature_stats, split
from src.inference import (
    FitConfig,
    Gradients,
    backward,
    backward_arrays,
    fit,
    forward,
    gradient_check,
    infer,
    init_model,
    load_model,
    loss,
    predict,
    prediction_loss,
    save_model,
    softmax,
)

UNIT_STATS = FeatureStats(mean=(0.0, 0.0), std=(1.0, 1.0))


@pytest.fixture
def small_model(space2):
    return init_model(2, (5, 4), UNIT_STATS, space2, seed=1)


@pytest.fixture
def batch():
    rng = np.random.default_rng(5)
    x = rng.normal(0.0, 3.0, size=(6, 2))
    w0 = rng.integers(0, 11, size=6) / 10
    y = np.stack([w0, 1.0 - w0], axis=1)
    return x, y


@pytest.fixture
def split_demos(demo_factory):
    return split(demo_factory(300), (0.8, 0.1, 0.1), seed=0)


@pytest.mark.unit
class TestForward:
    def test_zero_model_is_uniform(self, space2):
        model = init_model(2, (8, 8), UNIT_STATS, space2, zero=True)
        assert forward(model, [53.93, -8.0]).weights == (0.5, 0.5)

    def test_output_on_simplex(self, small_model, batch):
        p = predict(small_model, batch[0])
        assert np.all(p >= 0.0)
        np.testing.assert_allclose(p.sum(axis=1), 1.0)

    def test_softmax_is_stable(self):
        p = softmax(np.array([[1000.0, 0.0], [-1000.0, -1000.0]]))
        assert np.all(np.isfinite(p))
        np.testing.assert_allclose(p, [[1.0, 0.0], [0.5, 0.5]])

    @pytest.mark.parametrize("features", [[float("nan"), 1.0], [float("inf"), 0.0]])
    def test_non_finite_input(self, small_model, features):
        with pytest.raises(NonFiniteInputError):
            forward(small_model, features)

    def test_wrong_length(self, small_model):
        with pytest.raises(DimensionMismatchError):
            forward(small_model, [1.0, 2.0, 3.0])

    def test_parameters_are_read_only(self, small_model):
        with pytest.raises(ValueError):
            small_model.weights[0][0, 0] = 1.0


@pytest.mark.unit
class TestLoss:
    def test_squared_example(self):
        assert prediction_loss(np.array([[1.0, 0.0]]), np.array([[0.0, 1.0]]), "squared") == pytest.approx(2.0)

    def test_l2_example(self):
        value = prediction_loss(np.array([[0.5, 0.5]]), np.array([[1.0, 0.0]]), "l2")
        assert value == pytest.approx(math.sqrt(0.5))

    def test_loss_over_demonstrations(self, space2, demo_factory):
        model = init_model(2, (4,), UNIT_STATS, space2, zero=True)
        demos = list(demo_factory(10).demos)
        expected = np.mean([np.sum((0.5 - np.array(d.target.weights)) ** 2) for d in demos])
        assert loss(model, demos) == pytest.approx(expected)

    def test_empty_batch(self, small_model):
        with pytest.raises(ValueError):
            loss(small_model, [])


@pytest.mark.unit
class TestGradients:
    @pytest.mark.parametrize("loss_kind", ["squared", "l2"])
    def test_matches_finite_differences(self, small_model, batch, loss_kind):
        x, y = batch
        check = gradient_check(small_model, x, y, loss_kind, n_coords=100)
        assert len(check.coordinates) == 100
        assert check.max_relative_error < 1e-4

    @pytest.mark.parametrize("loss_kind", ["squared", "l2"])
    def test_zero_at_perfect_prediction(self, small_model, batch, loss_kind):
        x, _ = batch
        grads = backward_arrays(small_model, x, predict(small_model, x), loss_kind)
        assert grads.norm() < 1e-8

    def test_duplicated_batch_same_gradient(self, small_model, batch):
        x, y = batch
        once = backward_arrays(small_model, x, y)
        twice = backward_arrays(small_model, np.vstack([x, x]), np.vstack([y, y]))
        for a, b in zip((*once.weights, *once.biases), (*twice.weights, *twice.biases)):
            np.testing.assert_allclose(a, b, rtol=1e-12, atol=1e-15)

    def test_shapes_follow_parameters(self, small_model, demo_factory):
        grads = backward(small_model, list(demo_factory(4).demos))
        assert [g.shape for g in grads.weights] == [w.shape for w in small_model.weights]
        assert [g.shape for g in grads.biases] == [b.shape for b in small_model.biases]


@pytest.mark.unit
class TestFit:
    def _model(self, ds, space2, hidden=(16,)):
        return init_model(2, hidden, feature_stats(ds), space2, seed=0)

    def test_zero_epochs_returns_initial_model(self, split_demos, space2):
        model = self._model(split_demos, space2)
        result = fit(model, split_demos, FitConfig(max_epochs=0))
        assert result.model is model
        assert result.epochs_run == 0
        assert result.best_epoch == 0

    def test_deterministic(self, split_demos, space2):
        cfg = FitConfig(max_epochs=15, learning_rate=0.05, seed=3)
        a = fit(self._model(split_demos, space2), split_demos, cfg)
        b = fit(self._model(split_demos, space2), split_demos, cfg)
        assert a.train_loss == b.train_loss
        for wa, wb in zip(a.model.weights, b.model.weights):
            np.testing.assert_array_equal(wa, wb)

    def test_improves_and_keeps_best(self, split_demos, space2):
        model = self._model(split_demos, space2)
        x_val, y_val = split_demos.features_matrix("validation"), split_demos.targets_matrix("validation")
        initial = prediction_loss(predict(model, x_val), y_val, "squared")
        result = fit(model, split_demos, FitConfig(max_epochs=40, learning_rate=0.05))
        curve = result.best_validation_loss
        assert all(b <= a for a, b in zip(curve, curve[1:]))
        assert curve[-1] < initial
        assert prediction_loss(predict(result.model, x_val), y_val, "squared") == pytest.approx(curve[-1])

    def test_early_stopping(self, split_demos, space2, mocker):
        mocker.patch("src.inference.training.loss_arrays", return_value=1.0)
        model = self._model(split_demos, space2)
        result = fit(model, split_demos, FitConfig(max_epochs=500, patience=3))
        assert result.stopped_early
        assert result.epochs_run == 3
        assert result.best_epoch == 0
        assert result.model is model

    def test_empty_validation_split(self, demo_factory, space2):
        ds = demo_factory(20)
        with pytest.raises(EmptySplitError):
            fit(self._model(ds, space2), ds, FitConfig(max_epochs=5))

    def test_divergence_names_epoch(self, split_demos, space2, mocker):
        def nan_gradients(model, x, y, loss_kind):
            return Gradients(
                weights=tuple(np.full_like(w, np.nan) for w in model.weights),
                biases=tuple(np.full_like(b, np.nan) for b in model.biases),
            )

        mocker.patch("src.inference.training.backward_arrays", side_effect=nan_gradients)
        with pytest.raises(DivergenceError) as exc:
            fit(self._model(split_demos, space2), split_demos, FitConfig(max_epochs=5))
        assert exc.value.epoch == 1

    @pytest.mark.slow
    def test_learns_linear_mapping(self, demo_factory, space2):
        ds = split(demo_factory(1000), (0.8, 0.1, 0.1), seed=0)
        result = fit(self._model(ds, space2, hidden=(64, 64)), ds, FitConfig(max_epochs=300, learning_rate=0.05))
        assert result.best_validation_loss[-1] < 0.02


@pytest.mark.unit
class TestInfer:
    def test_snaps_to_lattice(self, small_model, space2):
        result = infer(small_model, [2.0, -3.0])
        assert result.snapped in space2.points
        assert space2.points[result.lattice_index] == result.snapped
        expected = np.linalg.norm(np.array(result.raw.weights) - np.array(result.snapped.weights))
        assert result.distance == pytest.approx(expected)


@pytest.mark.unit
class TestStorage:
    def test_round_trip(self, small_model, batch, tmp_path):
        path = save_model(small_model, tmp_path / "model.dwpi", extra={"train_eta": 0.0})
        loaded = load_model(path)
        np.testing.assert_array_equal(predict(loaded, batch[0]), predict(small_model, batch[0]))
        assert loaded.sizes == small_model.sizes
        assert loaded.stats == small_model.stats

    def test_resave_is_byte_identical(self, small_model, tmp_path):
        first = save_model(small_model, tmp_path / "a.dwpi")
        second = save_model(load_model(first), tmp_path / "b.dwpi")
        assert first.read_bytes() == second.read_bytes()

    def test_spec_hash_checked(self, small_model, tmp_path):
        path = save_model(small_model, tmp_path / "model.dwpi")
        with pytest.raises(ArtifactError):
            load_model(path, expected_spec_hash="ab" * 32)

    def test_truncated(self, small_model, tmp_path):
        path = save_model(small_model, tmp_path / "model.dwpi")
        path.write_bytes(path.read_bytes()[:-3])
        with pytest.raises(ArtifactError):
            load_model(path)

import numpy as np
import pytest

from apcnn import network, synth, training, transfer
from apcnn.datasets import LabeledDataset
from apcnn.errors import InvalidArgumentError


@pytest.fixture(scope="module")
def small_source():
    """A lightly trained 3-class network to transplant from."""
    spec = network.build_small_scnn(3, input_size=32)
    ds = synth.glyph_dataset(3, 20, size=32, seed=50)
    params = network.init_params(spec, seed=40)
    cfg = training.TrainConfig(seed=0, batch_size=15, max_epochs=4)
    params, _ = training.train(spec, params, ds, cfg)
    return spec, params, ds


class TestTransplant:
    def test_body_is_copied_bit_exactly(self, small_source):
        spec, params, _ = small_source
        new_spec, new_params = transfer.transplant(spec, params, 4, seed=9)
        for key in params.keys():
            if key.startswith("fc2."):
                continue
            np.testing.assert_array_equal(new_params[key], params[key])

    def test_head_is_replaced_and_resized(self, small_source):
        spec, params, _ = small_source
        new_spec, new_params = transfer.transplant(spec, params, 4, seed=9)
        assert new_spec.num_classes == 4
        assert new_params["fc2.w"].shape == (params["fc2.w"].shape[0], 4)
        assert new_params["fc2.w"].shape[1] != params["fc2.w"].shape[1]
        assert not new_params["fc2.b"].any()

    def test_velocities_are_reset(self, small_source):
        spec, params, _ = small_source
        params.velocity_for("conv1.w")  # trained stores carry velocity
        _, new_params = transfer.transplant(spec, params, 4, seed=9)
        assert new_params.velocity == {}

    def test_hidden_activations_match_source_before_training(self, small_source):
        spec, params, ds = small_source
        new_spec, new_params = transfer.transplant(spec, params, 4, seed=9)
        probes = ds.x[:10]
        cap_src, cap_new = {}, {}
        network.forward(spec, params, probes, mode="infer", capture=cap_src)
        network.forward(new_spec, new_params, probes, mode="infer", capture=cap_new)
        np.testing.assert_array_equal(cap_src["fc1"], cap_new["fc1"])

    @pytest.mark.parametrize("k_new", [2, 3])
    def test_must_strictly_grow(self, small_source, k_new):
        spec, params, _ = small_source
        with pytest.raises(InvalidArgumentError):
            transfer.transplant(spec, params, k_new, seed=0)

    def test_head_seed_is_reproducible(self, small_source):
        spec, params, _ = small_source
        _, a = transfer.transplant(spec, params, 4, seed=9)
        _, b = transfer.transplant(spec, params, 4, seed=9)
        np.testing.assert_array_equal(a["fc2.w"], b["fc2.w"])


class TestBuildTransferDataset:
    def make_old(self, per_class=100):
        rng = np.random.default_rng(0)
        x = (rng.random((per_class * 5, 8, 8, 1)) > 0.5).astype(np.float32)
        y = np.repeat(np.arange(5), per_class)
        return LabeledDataset(x, y, ("a", "b", "c", "d", "e"))

    def test_published_mix_counts(self):
        old = self.make_old(100)
        new_x = np.zeros((100, 8, 8, 1), dtype=np.float32)
        mixed = transfer.build_transfer_dataset(old, new_x, "fall", fraction=0.2, seed=1)
        assert len(mixed) == 200
        for c in range(5):
            assert int((mixed.y == c).sum()) == 20
        assert int((mixed.y == 5).sum()) == 100
        assert mixed.labels == ("a", "b", "c", "d", "e", "fall")

    def test_full_fraction_keeps_everything(self):
        old = self.make_old(10)
        mixed = transfer.build_transfer_dataset(old, np.zeros((4, 8, 8, 1)), "fall", fraction=1.0, seed=2)
        assert len(mixed) == 54

    def test_deterministic_given_seed(self):
        old = self.make_old(30)
        new_x = np.ones((10, 8, 8, 1), dtype=np.float32)
        m1 = transfer.build_transfer_dataset(old, new_x, "fall", fraction=0.2, seed=3)
        m2 = transfer.build_transfer_dataset(old, new_x, "fall", fraction=0.2, seed=3)
        np.testing.assert_array_equal(m1.x, m2.x)
        np.testing.assert_array_equal(m1.y, m2.y)

    def test_ceil_rounding(self):
        old = self.make_old(11)
        mixed = transfer.build_transfer_dataset(old, np.zeros((1, 8, 8, 1)), "fall", fraction=0.2, seed=0)
        for c in range(5):
            assert int((mixed.y == c).sum()) == 3  # ceil(0.2 * 11)

    def test_duplicate_label_rejected(self):
        old = self.make_old(5)
        with pytest.raises(InvalidArgumentError):
            transfer.build_transfer_dataset(old, np.zeros((1, 8, 8, 1)), "c", seed=0)

    def test_shape_mismatch_rejected(self):
        old = self.make_old(5)
        with pytest.raises(InvalidArgumentError):
            transfer.build_transfer_dataset(old, np.zeros((1, 9, 9, 1)), "fall", seed=0)


class TestTransferTrain:
    def test_end_to_end_growth(self, small_source):
        spec, params, ds = small_source
        new_x = synth.glyph_class_samples(5, 20, size=32, seed=77)
        cfg = training.TrainConfig(seed=1, batch_size=10, max_epochs=4)
        new_spec, new_params, mixed, logs = transfer.transfer_train(spec, params, ds, new_x, "disk", cfg)
        assert new_spec.num_classes == 4
        assert mixed.labels[-1] == "disk"
        assert logs[0].iteration == 1
        # the transplanted body keeps training: weights must move
        assert np.abs(new_params["conv1.w"] - params["conv1.w"]).max() > 0

    def test_freeze_through_pins_early_layers(self, small_source):
        spec, params, ds = small_source
        new_x = synth.glyph_class_samples(5, 20, size=32, seed=78)
        cfg = training.TrainConfig(seed=1, batch_size=10, max_epochs=2)
        _, frozen_params, _, _ = transfer.transfer_train(
            spec, params, ds, new_x, "disk", cfg, freeze_through="bn1"
        )
        np.testing.assert_array_equal(frozen_params["conv1.w"], params["conv1.w"])
        np.testing.assert_array_equal(frozen_params["bn1.gamma"], params["bn1.gamma"])
        assert np.abs(frozen_params["conv2.w"] - params["conv2.w"]).max() > 0

    def test_layers_through_rejects_unknown_names(self, small_source):
        spec, _, _ = small_source
        with pytest.raises(InvalidArgumentError):
            transfer.layers_through(spec, "relu1")


class TestTransferPlan:
    def test_fraction_bounds(self):
        with pytest.raises(InvalidArgumentError):
            transfer.TransferPlan(("a", "b"), old_data_fraction=0.0)
        with pytest.raises(InvalidArgumentError):
            transfer.TransferPlan(("a", "a"), old_data_fraction=0.5)
        plan = transfer.TransferPlan(("a", "b", "fall"))
        assert plan.old_data_fraction == 0.20

"""Tests for classifier augmentations and ADA."""

import pytest
import torch

from genifer.core.exceptions import ConfigurationError, ContractError
from genifer.schemas.experiment import AugPipelineConfig, HorizontalFlipOp, RandomCropOp
from genifer.services.augmentation import (
    AdaController,
    AdaPipeline,
    ada_apply,
    ada_signal,
    ada_update,
    apply_classifier_augs,
    horizontal_flip,
    random_crop,
)
from genifer.services.augmentation.ada import DEFAULT_ADA_OPS


@pytest.fixture
def images() -> torch.Tensor:
    """Batch of random images in [-1, 1]."""
    return torch.rand(6, 3, 8, 8, generator=torch.Generator().manual_seed(0)) * 2 - 1


class TestClassifierAugs:
    """Tests for flips and crops."""

    def test_flip_probability_zero(self, images: torch.Tensor) -> None:
        """Test a zero flip probability is the identity."""
        out = apply_classifier_augs(images, [HorizontalFlipOp(prob=0.0)], seed=1)
        assert torch.equal(out, images)

    def test_flip_is_involution(self, images: torch.Tensor) -> None:
        """Test flipping twice with the same mask restores the batch."""
        mask = torch.tensor([True, False, True, True, False, False])
        assert torch.equal(horizontal_flip(horizontal_flip(images, mask), mask), images)

    def test_flip_probability_one(self, images: torch.Tensor) -> None:
        """Test probability one mirrors every sample."""
        out = apply_classifier_augs(images, [HorizontalFlipOp(prob=1.0)], seed=1)
        assert torch.equal(out, images.flip(-1))

    def test_full_size_crop_is_identity(self, images: torch.Tensor) -> None:
        """Test an unpadded full-size crop returns the input."""
        out = random_crop(images, 8, torch.Generator().manual_seed(0))
        assert torch.equal(out, images)

    def test_padded_crop_keeps_shape(self, images: torch.Tensor) -> None:
        """Test a padded crop returns images of the input size."""
        out = apply_classifier_augs(images, [RandomCropOp(size=8, padding=2)], seed=3)
        assert out.shape == images.shape

    def test_resized_crop(self, images: torch.Tensor) -> None:
        """Test a smaller crop is resized back to the input size unless disabled."""
        out = apply_classifier_augs(images, [RandomCropOp(size=6)], seed=3)
        assert out.shape == images.shape
        small = apply_classifier_augs(images, [RandomCropOp(size=6, resize_to_input=False)], seed=3)
        assert tuple(small.shape[-2:]) == (6, 6)

    def test_crop_too_large(self, images: torch.Tensor) -> None:
        """Test a crop larger than the padded image is a configuration error."""
        with pytest.raises(ConfigurationError):
            apply_classifier_augs(images, [RandomCropOp(size=9)], seed=0)

    def test_deterministic(self, images: torch.Tensor) -> None:
        """Test the same seed gives the same augmentation."""
        ops = [HorizontalFlipOp(prob=0.5), RandomCropOp(size=8, padding=2)]
        assert torch.equal(apply_classifier_augs(images, ops, 9), apply_classifier_augs(images, ops, 9))


class TestAdaApply:
    """Tests for the discriminator augmentation pipeline."""

    def test_zero_probability_identity(self, images: torch.Tensor) -> None:
        """Test p=0 returns the batch bitwise."""
        assert torch.equal(ada_apply(images, 0.0, seed=0), images)

    def test_probability_above_cap(self, images: torch.Tensor) -> None:
        """Test p=1 with cap 0.5 is a contract error."""
        with pytest.raises(ContractError):
            ada_apply(images, 1.0, seed=0, p_cap=0.5)

    def test_negative_probability(self, images: torch.Tensor) -> None:
        """Test a negative p is a contract error."""
        with pytest.raises(ContractError):
            ada_apply(images, -0.1, seed=0)

    def test_deterministic(self, images: torch.Tensor) -> None:
        """Test a fixed seed gives identical output twice."""
        assert torch.equal(ada_apply(images, 0.5, seed=4), ada_apply(images, 0.5, seed=4))

    def test_changes_images_at_cap(self, images: torch.Tensor) -> None:
        """Test p=0.5 alters at least one sample of a batch."""
        assert not torch.equal(ada_apply(images, 0.5, seed=4), images)

    @pytest.mark.parametrize("op", DEFAULT_ADA_OPS)
    def test_single_op_keeps_shape(self, images: torch.Tensor, op: str) -> None:
        """Test every op preserves the batch shape."""
        assert ada_apply(images, 0.5, seed=2, ops=(op,)).shape == images.shape

    def test_unknown_op(self, images: torch.Tensor) -> None:
        """Test an unknown op name is a configuration error."""
        with pytest.raises(ConfigurationError):
            ada_apply(images, 0.5, seed=0, ops=("cutout",))  # type: ignore[arg-type]


class TestAdaUpdate:
    """Tests for the adaptive probability update."""

    def test_signal_at_target(self) -> None:
        """Test r equal to the target leaves p unchanged."""
        config = AugPipelineConfig(ada_target=0.6)
        assert ada_update(0.2, 0.6, config) == 0.2

    def test_stays_at_cap(self) -> None:
        """Test p at the cap with an overfitting signal stays at the cap."""
        config = AugPipelineConfig()
        assert ada_update(0.5, 1.0, config) == 0.5

    def test_stays_at_zero(self) -> None:
        """Test p=0 with a low signal stays at zero."""
        config = AugPipelineConfig()
        assert ada_update(0.0, -1.0, config) == 0.0

    def test_moves_by_step(self) -> None:
        """Test p moves by the adjust step in the direction of the signal."""
        config = AugPipelineConfig(ada_adjust_step=0.01)
        assert ada_update(0.2, 0.9, config) == pytest.approx(0.21)
        assert ada_update(0.2, 0.1, config) == pytest.approx(0.19)

    def test_signal_from_scores(self) -> None:
        """Test r is the mean sign of real scores."""
        assert ada_signal(torch.tensor([2.0, 1.0, -0.5, 3.0])) == pytest.approx(0.5)

    def test_controller_respects_cap(self) -> None:
        """Test p never exceeds the cap under a constant overfitting signal."""
        config = AugPipelineConfig(ada_adjust_step=0.2, ada_interval=1)
        controller = AdaController(AdaPipeline.from_config(config), config)
        for _ in range(20):
            controller.observe(torch.ones(4))
            assert controller.pipeline.p <= 0.5
        assert controller.pipeline.p == 0.5
        assert len(controller.trace) == 20

    def test_controller_interval(self) -> None:
        """Test p is updated once every interval discriminator steps."""
        config = AugPipelineConfig(ada_adjust_step=0.01, ada_interval=4)
        controller = AdaController(AdaPipeline.from_config(config), config)
        for _ in range(10):
            controller.observe(torch.ones(2))
        assert [u.d_step for u in controller.trace] == [4, 8]


class TestAdaPipeline:
    """Tests for the stateful pipeline wrapper."""

    def test_real_and_fake_see_same_configuration(self, images: torch.Tensor) -> None:
        """Test both sides of one step get identical ops and probability."""
        pipeline = AdaPipeline.from_config(AugPipelineConfig(ada_initial_p=0.3))
        pipeline.record_calls = True
        g = torch.Generator().manual_seed(0)
        real = pipeline(images, "real", 1, g)
        fake = pipeline(images, "fake", 1, g)
        first, second = pipeline.call_log
        assert (first.side, second.side) == ("real", "fake")
        assert (first.ops, first.p) == (second.ops, second.p)
        assert not torch.equal(real, fake)

    def test_disabled_pipeline_is_identity(self, images: torch.Tensor) -> None:
        """Test a disabled pipeline returns the input and logs nothing."""
        pipeline = AdaPipeline.from_config(AugPipelineConfig(ada_initial_p=0.5), enabled=False)
        pipeline.record_calls = True
        assert pipeline(images, "real", 1, 0) is images
        assert pipeline.call_log == []

    def test_config_switch_disables(self) -> None:
        """Test ada_enabled=False disables the pipeline."""
        assert not AdaPipeline.from_config(AugPipelineConfig(ada_enabled=False)).enabled

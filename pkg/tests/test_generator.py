import numpy as np
import pytest

from stylefuse import (Generator, GeneratorConfig, StyleVector, WeightStore,
                       init_random_weights)
from stylefuse.autodiff import Tensor, grad_check
from stylefuse.errors import ContractError, WeightLoadError
from stylefuse.fixtures import sample_style
from stylefuse.generator import LEAKY_SLOPE, MAPPING_DEPTH, NoiseBank, _weight_names


class TestConfig:
    def test_resolution_must_match_stage_count(self):
        with pytest.raises(ContractError):
            GeneratorConfig(layers=8, width=64, base_resolution=4,
                            output_resolution=64, channels=(128, 64, 32, 16))

    def test_odd_layer_count_rejected(self):
        with pytest.raises(ContractError):
            GeneratorConfig(layers=7, width=64, base_resolution=8,
                            output_resolution=64, channels=(1, 2, 3))

    def test_reference_scale_dimensions(self):
        cfg = GeneratorConfig.reference_scale()
        assert cfg.layers == 18 and cfg.width == 512
        assert cfg.output_resolution == 1024


class TestInitRandomWeights:
    def test_same_seed_identical(self, desk_config):
        a = init_random_weights(desk_config, 7)
        b = init_random_weights(desk_config, 7)
        for name in a.names():
            np.testing.assert_array_equal(a.get(name), b.get(name))

    def test_different_seeds_differ(self, desk_config):
        a = init_random_weights(desk_config, 7)
        b = init_random_weights(desk_config, 8)
        assert any(not np.array_equal(a.get(n), b.get(n)) for n in a.names())

    def test_generator_output_is_sane(self, desk_generator, desk_config):
        img = desk_generator.synthesize(sample_style(desk_config, 123))
        assert np.all(np.isfinite(img))
        assert img.std() > 1e-3
        assert img.min() >= 0.0 and img.max() <= 1.0

    def test_store_is_frozen(self, desk_generator):
        with pytest.raises(ValueError):
            desk_generator.weights.get("const")[0, 0, 0] = 1.0


class TestMapLatent:
    def test_zero_weights_zero_output(self, desk_config):
        entries = {n: np.zeros(s) for n, s in _weight_names(desk_config).items()}
        gen = Generator(desk_config, WeightStore(entries))
        sv = gen.map_latent(np.zeros(desk_config.width))
        np.testing.assert_array_equal(sv.values, 0.0)

    def test_deterministic(self, desk_generator, desk_config):
        z = np.random.default_rng(5).standard_normal(desk_config.width)
        a = desk_generator.map_latent(z)
        b = desk_generator.map_latent(z)
        np.testing.assert_array_equal(a.values, b.values)

    def test_matches_straight_line_algebra(self, desk_generator, desk_config):
        # independent recomputation: plain matrix algebra, no network code
        z = np.random.default_rng(6).standard_normal(desk_config.width)
        h = z
        for j in range(MAPPING_DEPTH):
            w = desk_generator.weights.get(f"mapping.{j}.weight")
            b = desk_generator.weights.get(f"mapping.{j}.bias")
            h = w @ h + b
            h = np.maximum(h, 0.0) + LEAKY_SLOPE * np.minimum(h, 0.0)
        sv = desk_generator.map_latent(z)
        assert sv.values.shape == (desk_config.layers, desk_config.width)
        for row in sv.values:
            np.testing.assert_allclose(row, h, atol=1e-12)

    def test_missing_weight_named(self, desk_config):
        names = _weight_names(desk_config)
        entries = {n: np.zeros(s) for n, s in names.items() if n != "mapping.1.bias"}
        with pytest.raises(WeightLoadError, match="mapping.1.bias"):
            Generator(desk_config, WeightStore(entries))


class TestSynthesize:
    def test_deterministic(self, desk_generator, desk_config):
        s = sample_style(desk_config, 17)
        np.testing.assert_array_equal(desk_generator.synthesize(s),
                                      desk_generator.synthesize(s))

    def test_layer_locality(self, desk_generator, desk_config):
        s = sample_style(desk_config, 18)
        changed = s.values.copy()
        changed[[4, 5]] = np.random.default_rng(19).standard_normal((2, desk_config.width))
        a = desk_generator.synthesize(s)
        b = desk_generator.synthesize(StyleVector(changed))
        assert np.linalg.norm(a - b) > 1e-6

    def test_wrong_style_shape(self, desk_generator):
        with pytest.raises(ContractError):
            desk_generator.synthesize(StyleVector(np.zeros((4, 64))))

    def test_gradient_wrt_style(self, desk_generator, desk_config):
        s = sample_style(desk_config, 20)
        err = grad_check(lambda t: desk_generator.forward(t).mean(),
                         Tensor(s.values), h=1e-6, max_coords=24)
        assert err < 1e-4


class TestNoiseBank:
    def test_deterministic_per_seed(self, desk_config):
        a = NoiseBank(desk_config)
        b = NoiseBank(desk_config)
        for x, y in zip(a.images, b.images):
            np.testing.assert_array_equal(x, y)

    def test_resolutions_double_per_stage(self, desk_config):
        bank = NoiseBank(desk_config)
        res = desk_config.base_resolution
        for stage in range(desk_config.stages):
            for half in range(2):
                assert bank.images[2 * stage + half].shape == (res, res)
            res *= 2


def test_weight_container_roundtrip(desk_generator, desk_config, tmp_path):
    path = tmp_path / "gen.ntws"
    desk_generator.weights.save(path)
    reloaded = WeightStore.load(path)
    gen2 = Generator(desk_config, reloaded)
    s = sample_style(desk_config, 21)
    np.testing.assert_array_equal(desk_generator.synthesize(s), gen2.synthesize(s))

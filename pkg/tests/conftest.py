import numpy as np
import pytest

from stylefuse import Generator, GeneratorConfig, StyleVector, init_random_weights
from stylefuse.fixtures import sample_style, write_fixture_pair

DESK_WEIGHT_SEED = 11


@pytest.fixture(scope="session")
def desk_config():
    return GeneratorConfig()


@pytest.fixture(scope="session")
def desk_generator(desk_config):
    return Generator(desk_config, init_random_weights(desk_config, DESK_WEIGHT_SEED))


@pytest.fixture(scope="session")
def tiny_config():
    # 4 style layers, 16x16 output: cheap enough for exhaustive searches
    return GeneratorConfig(layers=4, width=16, base_resolution=8,
                           output_resolution=16, channels=(16, 8))


@pytest.fixture(scope="session")
def tiny_generator(tiny_config):
    return Generator(tiny_config, init_random_weights(tiny_config, 3))


@pytest.fixture(scope="session")
def fixture_pair(tmp_path_factory):
    out = tmp_path_factory.mktemp("fixture_pair")
    return write_fixture_pair(out)


def random_style(config, seed) -> StyleVector:
    return sample_style(config, seed)

import pytest

from aoivnet.config import config_from_mapping


@pytest.fixture
def net():
    return config_from_mapping({})

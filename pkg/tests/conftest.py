import sys
from pathlib import Path

import pytest
from hypothesis import settings

sys.path.insert(0, str(Path(__file__).parent))

settings.register_profile("default", max_examples=40, deadline=None)
settings.load_profile("default")


@pytest.fixture(scope="session")
def pair():
    from gradflux import FluxPair

    return FluxPair.quadratic(1.0)

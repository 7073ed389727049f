import pytest
from hypothesis import HealthCheck, settings

from outdoorsim import demo_scene_path

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture(scope="session")
def demo_path():
    return demo_scene_path()


def write_scene(tmp_path, text, name="scene.toml"):
    p = tmp_path / name
    p.write_text(text)
    return p

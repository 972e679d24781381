import json

import numpy as np
import pytest

from sft.scene import paper_scene, save_scene


@pytest.fixture(scope="session")
def scene():
    return paper_scene()


@pytest.fixture()
def scene_file(tmp_path):
    path = tmp_path / "scene.json"
    save_scene(paper_scene(), path)
    return path


@pytest.fixture()
def small_scene_file(tmp_path):
    """Reduced analysis load for CLI round trips."""
    raw = paper_scene().to_dict()
    raw["analysis"]["frequencies"] = [1000.0]
    raw["analysis"]["sweep_radii"] = [0.1, 0.3]
    raw["analysis"]["band"] = {"f_min": 200.0, "f_max": 4000.0, "bins": 4}
    raw["analysis"]["field_plane"] = {"half_extent": 0.5, "resolution": 0.1}
    path = tmp_path / "scene_small.json"
    with open(path, "w") as fh:
        json.dump(raw, fh, indent=2, sort_keys=True)
    return path


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20260809)

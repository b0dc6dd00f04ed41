import json

import pytest

from navsim import episodes as episodes_mod
from navsim import scene as scene_mod

SQUARE_10 = {
    "version": 1,
    "id": "square-10",
    "wall_height": 2.5,
    "floor_color": [0.3, 0.3, 0.3],
    "ceiling_color": [0.9, 0.9, 0.9],
    "walls": [
        {"a": [0.0, 0.0], "b": [10.0, 0.0], "semantic_id": 1, "albedo": [0.6, 0.5, 0.4]},
        {"a": [10.0, 0.0], "b": [10.0, 10.0], "semantic_id": 2, "albedo": [0.5, 0.6, 0.4]},
        {"a": [10.0, 10.0], "b": [0.0, 10.0], "semantic_id": 3, "albedo": [0.4, 0.5, 0.6]},
        {"a": [0.0, 10.0], "b": [0.0, 0.0], "semantic_id": 4, "albedo": [0.6, 0.4, 0.5]},
    ],
}


def square_scene_dict():
    return json.loads(json.dumps(SQUARE_10))


@pytest.fixture(scope="session")
def square_scene():
    return scene_mod.scene_from_dict(square_scene_dict())


@pytest.fixture(scope="session")
def square_scene_file(tmp_path_factory):
    path = tmp_path_factory.mktemp("scenes") / "square-10.json"
    path.write_text(json.dumps(square_scene_dict()))
    return path


@pytest.fixture(scope="session")
def gen_scenes():
    """Three procedural scenes shared by the non-acceptance tests."""
    return [scene_mod.generate_scene(s) for s in (101, 102, 103)]


@pytest.fixture(scope="session")
def small_dataset(gen_scenes):
    constraints = episodes_mod.GenerationConstraints(count=24, seed=11)
    return episodes_mod.generate_dataset(gen_scenes, constraints)


def make_scene(walls, scene_id="custom", wall_height=2.5):
    """Hand-built scene from (a, b, semantic_id) triples without validation."""
    return scene_mod.Scene(
        id=scene_id,
        walls=[scene_mod.WallSegment(a=a, b=b, semantic_id=sid) for a, b, sid in walls],
        wall_height=wall_height,
    )


def rect_walls(x0, y0, x1, y1, sid_start=1):
    return [
        ((x0, y0), (x1, y0), sid_start),
        ((x1, y0), (x1, y1), sid_start + 1),
        ((x1, y1), (x0, y1), sid_start + 2),
        ((x0, y1), (x0, y0), sid_start + 3),
    ]

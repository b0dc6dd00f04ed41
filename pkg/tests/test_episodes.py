import itertools
import json
import math

import numpy as np
import pytest

from navsim import nav
from navsim.episodes import (DatasetError, EpisodeDataset, GenerationConstraints,
                             block_shuffle_iterator, block_shuffle_pass,
                             dataset_stats, generate_dataset, load_dataset,
                             partition_scenes, save_dataset)
from navsim.seeding import derive_rng
from navsim.task import Episode


def test_constraints_validation():
    with pytest.raises(DatasetError):
        GenerationConstraints(min_gdsp=5.0, max_gdsp=1.0)
    with pytest.raises(DatasetError):
        GenerationConstraints(easy_ratio_threshold=0.5)
    with pytest.raises(DatasetError):
        GenerationConstraints(easy_accept_prob=1.5)
    with pytest.raises(DatasetError):
        GenerationConstraints(count=0)


def test_generate_square_room(square_scene):
    constraints = GenerationConstraints(count=40, seed=1)
    ds = generate_dataset([square_scene], constraints)
    assert len(ds.episodes) == 40
    for e in ds.episodes:
        assert 1.0 <= e.gdsp <= 30.0
        assert e.gdsp <= math.hypot(9.8, 9.8) + 0.2
        assert e.ratio == pytest.approx(e.gdsp / e.euclidean, abs=1e-9)
        assert 0.0 <= e.start_heading < 2 * math.pi


def test_generate_deterministic_bytes(tmp_path, gen_scenes):
    constraints = GenerationConstraints(count=12, seed=5)
    pa, pb = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
    save_dataset(generate_dataset(gen_scenes, constraints), pa)
    save_dataset(generate_dataset(gen_scenes, constraints), pb)
    assert pa.read_bytes() == pb.read_bytes()


def test_round_robin_scene_assignment(small_dataset, gen_scenes):
    ids = [s.id for s in gen_scenes]
    for k, e in enumerate(small_dataset.episodes):
        assert e.scene_id == ids[k % len(ids)]


def test_save_load_round_trip(tmp_path, small_dataset):
    path = tmp_path / "ds.jsonl"
    save_dataset(small_dataset, path)
    loaded = load_dataset(path)
    assert loaded.episodes == small_dataset.episodes
    assert loaded.split == small_dataset.split
    assert loaded.constraints == small_dataset.constraints
    assert loaded.scene_ids == small_dataset.scene_ids


def test_load_rejects_duplicate_ids(tmp_path, small_dataset):
    path = tmp_path / "dup.jsonl"
    save_dataset(small_dataset, path)
    lines = path.read_text().splitlines()
    lines.append(lines[1])
    path.write_text("\n".join(lines) + "\n")
    with pytest.raises(DatasetError, match="duplicate"):
        load_dataset(path)


def test_load_rejects_bad_gdsp(tmp_path, small_dataset):
    path = tmp_path / "bad.jsonl"
    save_dataset(small_dataset, path)
    lines = path.read_text().splitlines()
    row = json.loads(lines[1])
    row["episode_id"] = "bad-low"
    row["gdsp"] = 0.5
    row["euclidean"] = 0.5
    row["ratio"] = 1.0
    lines.append(json.dumps(row))
    path.write_text("\n".join(lines) + "\n")
    with pytest.raises(Exception, match="gdsp"):
        load_dataset(path)


def test_load_rejects_unknown_scene(tmp_path, small_dataset):
    path = tmp_path / "ghost.jsonl"
    save_dataset(small_dataset, path)
    lines = path.read_text().splitlines()
    row = json.loads(lines[1])
    row["episode_id"] = "ghost-1"
    row["scene_id"] = "missing-scene"
    lines.append(json.dumps(row))
    path.write_text("\n".join(lines) + "\n")
    with pytest.raises(DatasetError, match="unknown scene"):
        load_dataset(path)


def test_load_rejects_version_mismatch(tmp_path, small_dataset):
    path = tmp_path / "v9.jsonl"
    save_dataset(small_dataset, path)
    lines = path.read_text().splitlines()
    header = json.loads(lines[0])
    header["version"] = 9
    lines[0] = json.dumps(header)
    path.write_text("\n".join(lines) + "\n")
    with pytest.raises(DatasetError, match="version"):
        load_dataset(path)


def test_stored_gdsp_revalidates(small_dataset, gen_scenes):
    grids = {s.id: nav.rasterize_navigable(s.segment_array(), s.bounds())
             for s in gen_scenes}
    for e in small_dataset.episodes[:9]:
        field = nav.distance_field(grids[e.scene_id], e.goal_position)
        again = nav.geodesic_distance(field, e.start_position)
        assert again == pytest.approx(e.gdsp, abs=1e-6)


def test_easy_fraction_throttled(gen_scenes):
    scenes = gen_scenes[:2]
    base = GenerationConstraints(count=120, seed=3, easy_accept_prob=1.0)
    throttled = GenerationConstraints(count=120, seed=3, easy_accept_prob=0.2)

    def easy_fraction(c):
        ds = generate_dataset(scenes, c)
        return np.mean([e.ratio < c.easy_ratio_threshold for e in ds.episodes])

    assert easy_fraction(throttled) < easy_fraction(base)


def test_throttle_monotone_over_seeds(gen_scenes):
    scene = gen_scenes[0]
    for seed in range(5):
        fractions = []
        for prob in (1.0, 0.5, 0.1):
            c = GenerationConstraints(count=60, seed=seed, easy_accept_prob=prob)
            ds = generate_dataset([scene], c)
            fractions.append(np.mean([e.ratio < 1.1 for e in ds.episodes]))
        assert fractions[0] >= fractions[1] >= fractions[2] - 0.05


def test_ratio_lower_bound(small_dataset):
    # geodesic dominates euclidean up to grid discretization
    for e in small_dataset.episodes:
        assert e.ratio >= 1.0 - 2 * 0.05 / e.euclidean


def test_partition_scenes():
    assert partition_scenes(["a", "b", "c", "d", "e"], 2) == [["a", "b", "c"], ["d", "e"]]
    assert partition_scenes(["a", "b"], 2) == [["a"], ["b"]]
    with pytest.raises(DatasetError, match="workers"):
        partition_scenes(["a"], 2)


def make_flat_dataset(n_eps, scene_ids):
    episodes = []
    for k in range(n_eps):
        sid = scene_ids[k % len(scene_ids)]
        episodes.append(Episode(
            episode_id=f"e-{k:05d}", scene_id=sid,
            start_position=(1.0, 1.0), start_heading=0.0,
            goal_position=(4.0, 1.0), gdsp=3.0, euclidean=3.0, ratio=1.0))
    return EpisodeDataset(episodes=episodes, scene_ids=tuple(scene_ids))


def test_block_shuffle_two_scenes_two_workers():
    ds = make_flat_dataset(40, ["s1", "s2"])
    streams = block_shuffle_iterator(ds, num_workers=2, block_size=10, seed=0)
    first = list(itertools.islice(streams[0], 20))
    second = list(itertools.islice(streams[1], 20))
    assert {e.scene_id for e in first} == {"s1"}
    assert {e.scene_id for e in second} == {"s2"}


def test_block_shuffle_block_structure():
    ds = make_flat_dataset(1500, ["solo"])
    rng = derive_rng(4, "worker", 0)
    one_pass = block_shuffle_pass(ds, ["solo"], 500, rng)
    assert len(one_pass) == 1500
    # within-block order preserved: the pass is a permutation of 3 blocks
    blocks = [one_pass[i * 500:(i + 1) * 500] for i in range(3)]
    original = ds.episodes
    starts = sorted(original.index(b[0]) for b in blocks)
    assert starts == [0, 500, 1000]
    for b in blocks:
        base = original.index(b[0])
        assert b == original[base:base + 500]
    # fairness: each episode appears exactly once per pass
    assert sorted(e.episode_id for e in one_pass) == \
        sorted(e.episode_id for e in original)


def test_block_shuffle_deterministic():
    ds = make_flat_dataset(120, ["s1", "s2"])
    a = [e.episode_id for e in itertools.islice(
        block_shuffle_iterator(ds, 1, block_size=20, seed=9)[0], 300)]
    b = [e.episode_id for e in itertools.islice(
        block_shuffle_iterator(ds, 1, block_size=20, seed=9)[0], 300)]
    assert a == b
    # stream repeats with fresh shuffles: the second pass is a permutation
    first_pass, second_pass = a[:120], a[120:240]
    assert sorted(first_pass) == sorted(second_pass)


def test_stats_single_episode():
    ds = make_flat_dataset(1, ["s"])
    ds.episodes[0] = Episode(episode_id="only", scene_id="s",
                             start_position=(0, 0), start_heading=0.0,
                             goal_position=(5, 0), gdsp=5.0, euclidean=5.0, ratio=1.0)
    stats = dataset_stats(ds)
    assert stats["gdsp"]["mean"] == 5.0
    assert stats["gdsp"]["median"] == 5.0
    assert stats["episodes"] == 1


def test_stats_histograms_and_easy_mass(square_scene):
    # obstacle-free room: every ratio is ~1, all mass in the first ratio bin
    ds = generate_dataset([square_scene], GenerationConstraints(count=30, seed=2))
    stats = dataset_stats(ds)
    assert stats["ratio_histogram"]["counts"][0] == 30
    assert sum(stats["gdsp_histogram"]["counts"]) == 30
    assert stats["easy_fraction"] == 1.0


def test_stats_oracle_actions(square_scene):
    ds = generate_dataset([square_scene], GenerationConstraints(count=6, seed=8))
    stats = dataset_stats(ds, scenes=[square_scene], oracle=True)
    assert stats["oracle_actions"]["count"] == 6
    assert stats["oracle_actions"]["max"] < 500


def test_empty_dataset_stats():
    with pytest.raises(DatasetError):
        dataset_stats(EpisodeDataset(episodes=[]))

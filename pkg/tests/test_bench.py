import json

import pytest

from navsim.bench import (BenchConfig, BenchError, BenchReport, render_report,
                          run_benchmark)
from navsim.scene import generate_scene, save_scene


@pytest.fixture(scope="module")
def scene_file(tmp_path_factory):
    path = tmp_path_factory.mktemp("bench") / "scene.json"
    save_scene(generate_scene(55), path)
    return path


@pytest.fixture(scope="module")
def small_report(scene_file):
    config = BenchConfig(scene_path=str(scene_file), resolutions=(64, 128),
                         sensor_sets=("rgb", "rgbd"), worker_counts=(1, 2),
                         frames=150, warmup=30)
    return run_benchmark(config)


def test_config_validation(scene_file):
    with pytest.raises(BenchError):
        BenchConfig(scene_path=str(scene_file), frames=10, warmup=20)
    with pytest.raises(BenchError):
        BenchConfig(scene_path=str(scene_file), sensor_sets=("thermal",))
    with pytest.raises(BenchError):
        BenchConfig(scene_path=str(scene_file), worker_counts=(0,))
    with pytest.raises(BenchError):
        BenchConfig(scene_path=str(scene_file), repeats=0)


def test_report_shape(small_report):
    assert len(small_report.cells) == 2 * 2 * 2
    for cell in small_report.cells:
        assert not cell.failed
        assert cell.fps_aggregate > 0
        assert len(cell.fps_per_worker) == cell.workers
        if cell.workers == 1:
            # single-worker aggregate equals the worker's own rate
            rel = abs(cell.fps_aggregate - cell.fps_per_worker[0]) / cell.fps_aggregate
            assert rel <= 0.05


def test_aggregate_worker_consistency(scene_file):
    # needs a real measurement window: sub-20 ms cells are dominated by
    # post-barrier scheduling latency, not by rendering
    report = run_benchmark(BenchConfig(
        scene_path=str(scene_file), resolutions=(128,), sensor_sets=("rgbd",),
        worker_counts=(2,), frames=1300, warmup=100, repeats=3))
    cell = report.cell("rgbd", 128, 2)
    rel = abs(cell.fps_aggregate - sum(cell.fps_per_worker)) / cell.fps_aggregate
    assert rel <= 0.15


def test_warmup_exclusion(scene_file):
    # doubling the warmup leaves the measured fps roughly unchanged; the
    # steady-host figure is 5%, this shared 2-core box jitters around that
    base = run_benchmark(BenchConfig(
        scene_path=str(scene_file), resolutions=(128,), sensor_sets=("rgbd",),
        worker_counts=(1,), frames=1300, warmup=100, repeats=3))
    doubled = run_benchmark(BenchConfig(
        scene_path=str(scene_file), resolutions=(128,), sensor_sets=("rgbd",),
        worker_counts=(1,), frames=1400, warmup=200, repeats=3))
    a = base.cell("rgbd", 128, 1).fps_aggregate
    b = doubled.cell("rgbd", 128, 1).fps_aggregate
    assert abs(a - b) / a <= 0.15


def test_json_round_trip(small_report):
    again = BenchReport.from_json(small_report.to_json())
    assert again.scene_id == small_report.scene_id
    assert [c.fps_aggregate for c in again.cells] == \
        [c.fps_aggregate for c in small_report.cells]
    parsed = json.loads(render_report(small_report, "json"))
    assert parsed["cells"][0]["sensors"] == small_report.cells[0].sensors


def test_markdown_is_pipe_table(small_report):
    md = render_report(small_report, "markdown")
    lines = md.splitlines()
    assert all(ln.startswith("|") and ln.endswith("|") for ln in lines)
    width = lines[0].count("|")
    assert all(ln.count("|") == width for ln in lines)
    assert len(lines) == 2 + 2  # header + divider + one row per sensor set


def test_text_table_mentions_cells(small_report):
    text = render_report(small_report, "text")
    assert "rgb" in text and "rgbd" in text
    assert "1w 64" in text and "2w 128" in text


def test_failed_cells_render_as_dash(small_report):
    import copy
    poisoned = copy.deepcopy(small_report)
    poisoned.cells[0].failed = True
    text = render_report(poisoned, "text")
    assert "--" in text


def test_unknown_format(small_report):
    with pytest.raises(BenchError):
        render_report(small_report, "xml")


def test_bad_scene_fails_fast(tmp_path):
    missing = tmp_path / "none.json"
    config = BenchConfig(scene_path=str(missing), resolutions=(64,),
                         sensor_sets=("rgb",), worker_counts=(1,),
                         frames=50, warmup=10)
    with pytest.raises(Exception):
        run_benchmark(config)

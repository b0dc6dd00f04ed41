import json

import pytest

from navsim.cli import main


def run(argv, capsys):
    code = main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def test_unknown_flag_exits_one(capsys):
    code, _, err = run(["gen-scenes", "--wat"], capsys)
    assert code == 1
    assert "error" in err


def test_missing_subcommand_exits_one(capsys):
    code, _, _ = run([], capsys)
    assert code == 1


def test_gen_scenes_deterministic(tmp_path, capsys):
    out_a = tmp_path / "a"
    out_b = tmp_path / "b"
    for out in (out_a, out_b):
        code, stdout, _ = run(["gen-scenes", "--count", "2", "--seed", "3",
                               "--out", str(out)], capsys)
        assert code == 0
        assert "navsim gen-scenes" in stdout  # effective-config banner
    files_a = sorted(p.name for p in out_a.glob("*.json"))
    files_b = sorted(p.name for p in out_b.glob("*.json"))
    assert files_a == files_b and len(files_a) == 2
    for name in files_a:
        assert (out_a / name).read_bytes() == (out_b / name).read_bytes()


@pytest.fixture(scope="module")
def workspace(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli")
    scenes = root / "scenes"
    code = main(["gen-scenes", "--count", "2", "--seed", "3", "--out", str(scenes)])
    assert code == 0
    episodes = root / "ep.jsonl"
    code = main(["gen-episodes", "--scenes", str(scenes), "--count", "14",
                 "--seed", "9", "--out", str(episodes)])
    assert code == 0
    return root, scenes, episodes


def test_gen_episodes_honors_constraints(workspace):
    from navsim.episodes import load_dataset
    _, _, episodes = workspace
    ds = load_dataset(episodes)
    assert len(ds.episodes) == 14
    assert all(1.0 <= e.gdsp <= 30.0 for e in ds.episodes)


def test_stats_json(workspace, capsys):
    root, scenes, episodes = workspace
    out_file = root / "stats.json"
    code, _, _ = run(["stats", "--episodes", str(episodes),
                      "--out", str(out_file)], capsys)
    assert code == 0
    stats = json.loads(out_file.read_text())
    assert stats["episodes"] == 14


def test_eval_oracle(workspace, capsys):
    root, scenes, episodes = workspace
    report_path = root / "report.json"
    code, stdout, _ = run(["eval", "--agent", "oracle", "--episodes", str(episodes),
                           "--scenes", str(scenes), "--seeds", "1",
                           "--out", str(report_path)], capsys)
    assert code == 0
    report = json.loads(report_path.read_text())
    assert report["success_rate"] == 1.0
    assert report["privileged"] is True
    assert "stderr over seeds" in stdout


def test_eval_reports_stderr_fields(workspace, capsys):
    root, scenes, episodes = workspace
    code, stdout, _ = run(["eval", "--agent", "forward", "--episodes", str(episodes),
                           "--scenes", str(scenes), "--seeds", "2"], capsys)
    assert code == 0
    assert "±" in stdout


def test_bench_tiny_run(workspace, capsys):
    root, scenes, episodes = workspace
    scene_file = sorted(scenes.glob("*.json"))[0]
    code, stdout, _ = run(["bench", "--scene", str(scene_file),
                           "--resolutions", "64", "--sensors", "rgbd",
                           "--workers", "1", "--frames", "120",
                           "--warmup", "20", "--format", "markdown"], capsys)
    assert code == 0
    table = [ln for ln in stdout.splitlines() if ln.startswith("|")]
    assert len(table) == 3  # header, divider, one sensor row
    assert table[0].count("|") == table[2].count("|")


def test_runtime_error_exits_two(tmp_path, capsys):
    code, _, err = run(["stats", "--episodes", str(tmp_path / "missing.jsonl")], capsys)
    assert code == 2
    assert "error" in err

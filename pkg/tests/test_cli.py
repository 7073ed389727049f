import subprocess
import sys

import pytest

from outdoorsim.cli import main


def test_validate_demo(demo_path, capsys):
    assert main(["--scene", str(demo_path), "--mode", "validate"]) == 0
    assert capsys.readouterr().out.startswith("ok: ")


def test_render_twice_identical(demo_path, tmp_path):
    args = ["--scene", str(demo_path), "--frames", "1", "--width", "64", "--height", "36"]
    assert main(args + ["--out", str(tmp_path / "a")]) == 0
    assert main(args + ["--out", str(tmp_path / "b")]) == 0
    da = (tmp_path / "a" / "digests.txt").read_bytes()
    assert da == (tmp_path / "b" / "digests.txt").read_bytes()
    assert da.startswith(b"frame_000001 ")
    ppm = (tmp_path / "a" / "frame_000001.ppm").read_bytes()
    assert ppm.startswith(b"P6\n64 36\n255\n") and len(ppm) == len(b"P6\n64 36\n255\n") + 64 * 36 * 3


def test_storm_events_byte_identical(demo_path, tmp_path):
    args = ["--scene", str(demo_path), "--mode", "dump-events", "--weather", "storm", "--seed", "5",
            "--frames", "240", "--fps", "2"]
    assert main(args + ["--out", str(tmp_path / "a")]) == 0
    assert main(args + ["--out", str(tmp_path / "b")]) == 0
    log = (tmp_path / "a" / "events.log").read_bytes()
    assert log == (tmp_path / "b" / "events.log").read_bytes()
    assert log.count(b"\n") > 0
    assert not (tmp_path / "a" / "digests.txt").exists()


def test_dump_instances(demo_path, tmp_path):
    assert main(["--scene", str(demo_path), "--mode", "dump-instances", "--out", str(tmp_path)]) == 0
    lines = (tmp_path / "instances_trees.txt").read_text().splitlines()
    assert lines and all(len(l.split()) == 9 for l in lines)
    assert (tmp_path / "instances_grass.txt").exists()


def test_state_flags_continue_run(demo_path, tmp_path):
    base = ["--scene", str(demo_path), "--width", "48", "--height", "27"]
    assert main(base + ["--frames", "4", "--out", str(tmp_path / "full")]) == 0
    assert main(base + ["--frames", "2", "--out", str(tmp_path / "p1"), "--save-state", str(tmp_path / "s.bin")]) == 0
    assert main(base + ["--frames", "2", "--out", str(tmp_path / "p2"), "--load-state", str(tmp_path / "s.bin")]) == 0
    full = (tmp_path / "full" / "digests.txt").read_text().splitlines()
    tail = (tmp_path / "p2" / "digests.txt").read_text().splitlines()
    assert tail == full[2:]


@pytest.mark.parametrize("extra, code", [
    (["--weather", "blizzard"], 1),
    (["--frames", "0"], 1),
    (["--fps", "-1"], 1),
    (["--bogus"], 1),
    (["--start", "yesterday"], 1),
])
def test_invalid_flags_exit_1(demo_path, tmp_path, extra, code):
    assert main(["--scene", str(demo_path), "--out", str(tmp_path)] + extra) == code


def test_missing_out_exit_1(demo_path):
    assert main(["--scene", str(demo_path)]) == 1


def test_missing_scene_exit_2(tmp_path):
    assert main(["--scene", str(tmp_path / "nope.toml"), "--mode", "validate"]) == 2


def test_invalid_scene_exit_1(tmp_path):
    bad = tmp_path / "bad.toml"
    bad.write_text("time_scale = -3\n")
    assert main(["--scene", str(bad), "--mode", "validate"]) == 1


def test_bad_state_exit_1(demo_path, tmp_path):
    junk = tmp_path / "junk.bin"
    junk.write_bytes(b"not a state file")
    assert main(["--scene", str(demo_path), "--out", str(tmp_path), "--load-state", str(junk)]) == 1


def test_unwritable_out_exit_2(demo_path, tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    assert main(["--scene", str(demo_path), "--out", str(blocker / "sub"), "--width", "16", "--height", "9"]) == 2


def test_module_entry_point(demo_path):
    r = subprocess.run([sys.executable, "-m", "outdoorsim", "--scene", str(demo_path), "--mode", "validate"],
                       capture_output=True, text=True)
    assert r.returncode == 0 and "ok:" in r.stdout

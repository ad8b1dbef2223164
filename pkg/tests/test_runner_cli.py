from roadwatch import m2m
from roadwatch.cli import main as cli_main
from roadwatch.config import parse_config
from roadwatch.imaging import read_pgm
from roadwatch.runner import escape_details, run_scenario, unescape_details
from conftest import messages_of_kind, parse_events

QUIET = """\
duration_s = 10
security_code = letmein-12345
latency_ticks = 5

[road R1]
width = 64
height = 160
y_a = 40
y_b = 120
distance_m = 20.0
speed_limit_mps = 13.0
window_s = 5
"""

BUSY = """\
duration_s = 20
security_code = letmein-12345
seed = 9

[road R1]
width = 160
height = 240
y_a = 60
y_b = 140
distance_m = 20.0
speed_limit_mps = 10.0
window_s = 10
vehicle = 0,2.0,40,10,12,2,200
vehicle = 100,2.0,100,10,12,2,200
"""


def read(path):
    return path.read_text(encoding="utf-8")


class TestEscaping:
    def test_round_trip(self):
        for s in ("a\nb", "back\\slash", "mix\\n\n\\", ""):
            assert unescape_details(escape_details(s)) == s

    def test_escaped_has_no_raw_newlines(self):
        assert "\n" not in escape_details("a\nb\nc")


class TestRunScenario:
    def test_quiet_road_produces_zero_rates(self, tmp_path):
        run_scenario(parse_config(QUIET), tmp_path)
        flows = read(tmp_path / "flows.csv").splitlines()
        assert flows[0] == "road_id,window_index,count,rate_veh_per_min"
        assert flows[1:] == [f"R1,{i},0,0.00" for i in range(2)]
        violations = read(tmp_path / "violations.csv").splitlines()
        assert len(violations) == 1  # header only
        assert "0.00 veh/min" in read(tmp_path / "board.txt")

    def test_flow_messages_and_board_in_events(self, tmp_path):
        run_scenario(parse_config(QUIET), tmp_path)
        events = parse_events(tmp_path / "events.log")
        sends = messages_of_kind(events, "SEND", m2m.FLOW)
        delivers = messages_of_kind(events, "DELIVER", m2m.FLOW)
        assert [t for t, _ in sends] == [125, 250]
        assert [t for t, _ in delivers] == [130, 255]
        boards = [(t, d) for t, k, d in events if k == "BOARD"]
        assert boards[0][0] == 0 and "ROAD R1: --" in boards[0][1]
        assert "0.00 veh/min (as of 5.000 s)" in boards[1][1]

    def test_crossings_counted_and_violations_logged(self, tmp_path):
        run_scenario(parse_config(BUSY), tmp_path)
        flows = read(tmp_path / "flows.csv").splitlines()[1:]
        counts = [int(line.split(",")[2]) for line in flows]
        assert sum(counts) == 2
        violations = read(tmp_path / "violations.csv").splitlines()[1:]
        assert len(violations) == 2  # both vehicles do 12.5 m/s in a 10 limit
        for line in violations:
            fields = line.split(",")
            assert fields[1] == "R1"
            assert fields[7] == "UNAVAILABLE"
            snapshot = tmp_path / fields[6]
            assert snapshot.exists()
            frame = read_pgm(snapshot.read_bytes())
            assert (frame.width, frame.height) == (160, 240)
        events = parse_events(tmp_path / "events.log")
        assert len([1 for _, k, _ in events if k == "VIOLATION"]) == 2

    def test_reruns_are_byte_identical(self, tmp_path):
        config = parse_config(BUSY)
        run_scenario(config, tmp_path / "a")
        run_scenario(config, tmp_path / "b")
        names = sorted(p.name for p in (tmp_path / "a").iterdir())
        assert names == sorted(p.name for p in (tmp_path / "b").iterdir())
        for name in names:
            assert (tmp_path / "a" / name).read_bytes() == (
                tmp_path / "b" / name
            ).read_bytes(), name

    def test_seed_changes_drop_pattern(self, tmp_path):
        base = parse_config(QUIET.replace(
            "latency_ticks = 5", "latency_ticks = 5\ndrop_probability = 0.5"))
        from dataclasses import replace

        run_scenario(replace(base, seed=1), tmp_path / "a")
        run_scenario(replace(base, seed=2), tmp_path / "b")
        a = read(tmp_path / "a" / "events.log")
        b = read(tmp_path / "b" / "events.log")
        assert a != b

    def test_interrupt_walkthrough(self, tmp_path):
        text = QUIET + (
            "\n[action]\nat_s = 3\nkind = INTERRUPT\nroad = R1\ntext = ROAD CLOSED\n"
        )
        run_scenario(parse_config(text), tmp_path)
        events = parse_events(tmp_path / "events.log")
        interrupts = messages_of_kind(events, "DELIVER", m2m.INTERRUPT)
        pauses = messages_of_kind(events, "SEND", m2m.PAUSE)
        assert len(interrupts) == 1 and len(pauses) == 1
        assert pauses[0][0] == interrupts[0][0]  # reply sent on delivery tick
        assert "ROAD R1: ROAD CLOSED" in read(tmp_path / "board.txt")
        # paused before the first window closed: no FLOW ever sent
        assert messages_of_kind(events, "SEND", m2m.FLOW) == []

    def test_dump_frames(self, tmp_path):
        config = parse_config(QUIET.replace("duration_s = 10", "duration_s = 5"))
        run_scenario(config, tmp_path, dump_frames=True)
        frames = sorted((tmp_path / "frames" / "R1").iterdir())
        assert len(frames) == 125
        assert frames[0].name == "frame_000000.pgm"
        first = read_pgm(frames[0].read_bytes())
        assert (first.width, first.height) == (64, 160)


class TestCli:
    def write_config(self, tmp_path, text=QUIET):
        path = tmp_path / "scenario.cfg"
        path.write_text(text, encoding="utf-8")
        return path

    def test_check_ok(self, tmp_path, capsys):
        path = self.write_config(tmp_path)
        assert cli_main(["check", "--config", str(path)]) == 0
        assert "OK: 1 road(s)" in capsys.readouterr().out

    def test_check_reports_errors(self, tmp_path, capsys):
        path = self.write_config(tmp_path, QUIET.replace("y_b = 120", "y_b = 10"))
        assert cli_main(["check", "--config", str(path)]) == 1
        assert "error:" in capsys.readouterr().err

    def test_missing_config_file(self, tmp_path, capsys):
        assert cli_main(["check", "--config", str(tmp_path / "nope.cfg")]) == 1
        assert "cannot read config" in capsys.readouterr().err

    def test_run_writes_outputs(self, tmp_path):
        path = self.write_config(tmp_path)
        out = tmp_path / "out"
        assert cli_main(["run", "--config", str(path), "--out", str(out)]) == 0
        for name in ("events.log", "board.txt", "flows.csv", "violations.csv"):
            assert (out / name).exists()

    def test_run_seed_override(self, tmp_path):
        path = self.write_config(
            tmp_path, QUIET.replace("latency_ticks = 5",
                                    "latency_ticks = 5\ndrop_probability = 0.5"))
        cli_main(["run", "--config", str(path), "--out", str(tmp_path / "a"), "--seed", "1"])
        cli_main(["run", "--config", str(path), "--out", str(tmp_path / "b"), "--seed", "2"])
        cli_main(["run", "--config", str(path), "--out", str(tmp_path / "c"), "--seed", "1"])
        a = read(tmp_path / "a" / "events.log")
        assert a != read(tmp_path / "b" / "events.log")
        assert a == read(tmp_path / "c" / "events.log")

    def test_render_scene_preview(self, tmp_path):
        path = self.write_config(tmp_path, BUSY)
        out = tmp_path / "frame.pgm"
        rc = cli_main(["render", "--config", str(path), "--road", "R1",
                       "--frame", "10", "--out", str(out)])
        assert rc == 0
        frame = read_pgm(out.read_bytes())
        assert (frame.width, frame.height) == (160, 240)
        assert frame.pixels.max() == 200  # the vehicle is in view

    def test_render_unknown_road(self, tmp_path, capsys):
        path = self.write_config(tmp_path)
        rc = cli_main(["render", "--config", str(path), "--road", "R9",
                       "--frame", "0", "--out", str(tmp_path / "x.pgm")])
        assert rc == 1
        assert "unknown road" in capsys.readouterr().err

    def test_inject_appends_action(self, tmp_path):
        path = self.write_config(tmp_path)
        rc = cli_main(["inject", "--config", str(path), "--at-s", "3",
                       "--kind", "INTERRUPT", "--road", "R1", "--text", "CLOSED"])
        assert rc == 0
        config = parse_config(path.read_text(encoding="utf-8"))
        assert len(config.actions) == 1
        assert config.actions[0].kind == "INTERRUPT"
        assert config.actions[0].text == "CLOSED"
        out = tmp_path / "out"
        cli_main(["run", "--config", str(path), "--out", str(out)])
        assert "CLOSED" in read(out / "board.txt")

    def test_inject_validates_road(self, tmp_path, capsys):
        path = self.write_config(tmp_path)
        rc = cli_main(["inject", "--config", str(path), "--at-s", "3",
                       "--kind", "RESUME", "--road", "R9"])
        assert rc == 1
        assert "unknown road" in capsys.readouterr().err
        # file untouched on error
        assert path.read_text(encoding="utf-8") == QUIET

    def test_inject_resume_without_prior_interrupt_is_forwarded(self, tmp_path):
        path = self.write_config(tmp_path)
        cli_main(["inject", "--config", str(path), "--at-s", "3",
                  "--kind", "RESUME", "--road", "R1"])
        out = tmp_path / "out"
        cli_main(["run", "--config", str(path), "--out", str(out)])
        events = parse_events(out / "events.log")
        resumes = messages_of_kind(events, "SEND", m2m.RESUME)
        # operator's plus the forwarded one from the main station
        assert [m.from_id for _, m in resumes] == ["operator", "main"]

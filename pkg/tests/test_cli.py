import json

from rsor.cli import main


def test_run_writes_trace(tmp_path, capsys):
    out = tmp_path / "trace.jsonl"
    code = main(["run", "--scenario", "baseline", "--seed", "3", "--out", str(out)])
    assert code == 0
    lines = out.read_text().splitlines()
    assert lines
    assert json.loads(lines[0])["time"] == 0


def test_run_unknown_scenario(capsys):
    assert main(["run", "--scenario", "nope"]) == 2


def test_run_config_file(tmp_path, capsys):
    config = tmp_path / "scenario.cfg"
    config.write_text(
        "name = demo\nrelays = a, b\nsenders = alice\nreceivers = svc\n"
        "onion = alice | a, b | svc | hi\n"
    )
    assert main(["run", "--config", str(config), "--seed", "1"]) == 0
    assert "message-received" in capsys.readouterr().out


def test_attack_summary(capsys):
    assert main(["attack", "tagging", "--trials", "3", "--seed", "1"]) == 0
    out = capsys.readouterr().out
    assert "success_rate" in out


def test_game_negative_control(capsys):
    code = main(["game", "tlu", "--adversary", "guessing", "--games", "40",
                 "--seed", "2"])
    assert code == 0
    assert "pass" in capsys.readouterr().out


def test_game_positive_control(capsys):
    code = main(["game", "sti", "--adversary", "path-length-padding",
                 "--games", "40", "--seed", "2", "--legacy-zero-padding"])
    assert code == 0


def test_game_correctness(capsys):
    assert main(["game", "correctness", "--games", "5", "--seed", "1"]) == 0


def test_game_rejects_unregistered_pairing(capsys):
    assert main(["game", "sti", "--adversary", "tag-consistency"]) == 2

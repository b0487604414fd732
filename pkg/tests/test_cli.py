from pathlib import Path

import pytest

from xmlcrdt.cli import main

SCENARIOS = Path(__file__).resolve().parent.parent / "scenarios"


def write(tmp_path, text, name="s.scn"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


@pytest.mark.parametrize("name", ["figure1.scn", "basic.scn", "gc.scn"])
def test_replay_shipped_scenarios(name, capsys):
    assert main(["replay", str(SCENARIOS / name)]) == 0
    out = capsys.readouterr().out
    assert "FAIL" not in out and "assertions passed" in out


def test_replay_concurrent_undo_prints_effects(capsys):
    main(["replay", str(SCENARIOS / "figure1.scn")])
    out = capsys.readouterr().out
    assert "Add 1,2 effect 0" in out and "Del 4,2 effect -1" in out


def test_replay_mismatch_exits_1(tmp_path, capsys):
    path = write(tmp_path, "replicas 1\nadd 1 parent=0,0 after=start tag=a\n"
                           "assert-render 1 <root><b/></root>\n")
    assert main(["replay", path]) == 1
    captured = capsys.readouterr()
    assert "FAIL" in captured.out and "0/1 assertions passed" in captured.out
    assert "gen 1 Add 1,1" in captured.err


def test_replay_parse_error_exits_2(tmp_path, capsys):
    path = write(tmp_path, "replicas 2\n\nadd 1 parent=zero\n")
    assert main(["replay", path]) == 2
    assert "parse error at line 3" in capsys.readouterr().err


def test_missing_file_exits_2(tmp_path, capsys):
    assert main(["replay", str(tmp_path / "nope.scn")]) == 2


def test_render_nested(tmp_path, capsys):
    path = write(tmp_path, "replicas 1\nadd 1 parent=0,0 after=start tag=a\n"
                           "setattr 1 target=1,1 name=x value=1\n"
                           "add 1 parent=1,1 after=start tag=b\n")
    assert main(["render", path]) == 0
    assert capsys.readouterr().out == '<root><a x="1"><b/></a></root>\n'


def test_render_empty_scenario(tmp_path, capsys):
    assert main(["render", write(tmp_path, "")]) == 0
    assert capsys.readouterr().out == "<root/>\n"


def test_render_all_undone(tmp_path, capsys):
    path = write(tmp_path, "replicas 2\nfifo no\nadd 1 parent=0,0 after=start tag=a\n"
                           "undo 1 op=1,1\ndeliver-all\n")
    assert main(["render", path, "--site", "2"]) == 0
    assert capsys.readouterr().out == "<root/>\n"


def test_render_unknown_site(tmp_path, capsys):
    assert main(["render", write(tmp_path, "replicas 2\n"), "--site", "9"]) == 2
    assert "unknown site 9" in capsys.readouterr().err


def test_fuzz_outputs(capsys):
    assert main(["fuzz", "--seed", "42", "--ops", "50"]) == 0
    out = capsys.readouterr()
    assert out.out.startswith("converged seed=42")
    assert "wall time" in out.err
    assert main(["fuzz", "--ops", "0", "--output", "xml"]) == 0
    assert capsys.readouterr().out.splitlines()[-1] == "<root/>"
    assert main(["fuzz", "--replicas", "1", "--ops", "20", "--mode", "lww"]) == 0


def test_fuzz_trace_is_deterministic(capsys):
    main(["fuzz", "--seed", "3", "--ops", "30", "--output", "trace"])
    first = capsys.readouterr().out
    main(["fuzz", "--seed", "3", "--ops", "30", "--output", "trace"])
    assert capsys.readouterr().out == first and "gen " in first


def test_bad_arguments_exit_2(capsys):
    assert main(["fuzz", "--replicas", "0"]) == 2
    with pytest.raises(SystemExit) as exc:
        main(["fuzz", "--mode", "bogus"])
    assert exc.value.code == 2


def test_concurrent_undo_command(capsys):
    assert main(["figure1"]) == 0
    out = capsys.readouterr().out
    assert "render: <root/>" in out


def test_gc_command(capsys):
    assert main(["gc", "--ops", "200"]) == 0
    out = capsys.readouterr().out
    assert "renders unchanged by purge: True" in out
    assert main(["gc", str(SCENARIOS / "gc.scn")]) == 0
    assert "storage 15 -> 4" in capsys.readouterr().out


def test_gc_requires_fifo(tmp_path, capsys):
    assert main(["gc", write(tmp_path, "fifo no\n")]) == 2

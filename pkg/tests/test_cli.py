import json

import pytest

from teamltl.cli import main

TWO = {"ap": ["p"], "index": 0,
       "traces": [{"stem": [["p"]], "loop": [[]]}, {"stem": [[], ["p"]], "loop": [[]]}]}
K_P = {"ap": ["p"], "states": [{"id": 0, "label": ["p"]}], "init": 0, "edges": [[0, 0]]}


@pytest.fixture
def files(tmp_path):
    def write(name, data):
        path = tmp_path / name
        path.write_text(data if isinstance(data, str) else json.dumps(data))
        return str(path)
    return write


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_parse_reports_fragments(capsys):
    code, out, _ = run(capsys, "parse", "(F p) U q", "--format", "json")
    data = json.loads(out)
    assert code == 0 and data["formula"] == "(F p U q)"
    assert "LeftFlat" not in data["fragments"] and "PlainTeamLTL" in data["fragments"]
    code, out, _ = run(capsys, "parse", "p orl q")
    assert code == 0 and out.endswith("reason: no supported fragment admits LeftOr\n")


def test_eval_exit_codes(capsys, files):
    team = files("two.json", TWO)
    assert run(capsys, "eval", team, "A1 F p")[:2] == (0, "true\n")
    assert run(capsys, "eval", team, "F p")[:2] == (1, "false\n")
    empty = files("empty.json", {"ap": ["p"], "index": 0, "traces": []})
    assert run(capsys, "eval", empty, "F p")[0] == 0


def test_eval_json_and_explain(capsys, files):
    code, out, _ = run(capsys, "eval", files("two.json", TWO), "p | X p", "--format", "json", "--explain")
    data = json.loads(out)
    assert code == 0 and data["verdict"] is True and data["traces"] == 2
    assert data["explain"][0].startswith("Or on {0,1} at 0: true")


def test_bad_input_exits_2(capsys, files):
    team = files("two.json", TWO)
    code, _, err = run(capsys, "eval", team, "p U")
    assert code == 2 and err.startswith("error:")
    assert run(capsys, "eval", "/nonexistent.json", "p")[0] == 2
    assert run(capsys, "eval", files("bad.json", "{"), "p")[0] == 2


def test_translate_with_team(capsys, files):
    code, out, _ = run(capsys, "translate", "A1 F p", "--fragment", "leftflat",
                       "--team", files("two.json", TWO))
    assert code == 0 and out.startswith("uexists[one] r.") and out.endswith("true\n")
    code, _, _ = run(capsys, "translate", "(F p) U q", "--fragment", "leftflat")
    assert code == 2


def test_mc_verdicts(capsys, files):
    k = files("k.json", K_P)
    assert run(capsys, "mc", k, "A1 G p", "--mode", "leftflat")[0] == 0
    assert run(capsys, "mc", k, "~p", "--mode", "kcoherent")[0] == 1
    code, out, _ = run(capsys, "mc", k, "~ G p", "--mode", "bounded")
    assert code == 3 and out.startswith("unknown")


def test_reduce_writes_files(capsys, files, tmp_path):
    machine = files("m.txt", "0: INC l -> {1,1}\n1: IFZ m ? 1 : 1\n")
    out = str(tmp_path / "inst")
    code, text, _ = run(capsys, "reduce", machine, "--b", "1", "--out", out)
    assert code == 0 and "(32 states)" in text
    assert json.loads((tmp_path / "inst.kripke.json").read_text())["init"] == 0
    assert (tmp_path / "inst.formula").read_text().strip()
    assert run(capsys, "reduce", machine, "--out", out)[0] == 2
    code, _, _ = run(capsys, "reduce", files("k.json", K_P), "--variant", "sat-embed", "--out", out)
    assert code == 0 and "p_0" in (tmp_path / "inst.formula").read_text()


def test_gen_is_deterministic(capsys):
    first = run(capsys, "gen", "formula", "--seed", "5", "--fragment", "LeftFlat")
    assert first == run(capsys, "gen", "formula", "--seed", "5", "--fragment", "LeftFlat")
    code, out, _ = run(capsys, "gen", "kripke", "--seed", "2")
    assert code == 0 and "edges" in json.loads(out)


def test_check_props(capsys):
    code, out, _ = run(capsys, "check-props", "--suite", "singleton", "--trials", "30")
    assert code == 0 and out.startswith("PASS singleton")
    code, out, _ = run(capsys, "check-props", "--suite", "kcoherent", "--trials", "100", "--mutate")
    assert code == 1 and "counterexample" in out

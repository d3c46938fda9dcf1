import json

from provgame.cli import dispatch

CASARI = ("(forall x. ((P(x) -> forall x. P(x)) -> forall x. P(x)))"
          " -> forall x. P(x)")


def run(*argv):
    return dispatch(list(argv))


def test_parse_round_trips():
    status, out = run("parse", "--phi", "~P(c)")
    assert status == 0
    assert out.strip() == "~P(c)"


def test_parse_structured_lists_signature():
    status, out = run("parse", "--phi", "Q(c, d) -> R", "--format", "structured")
    assert status == 0
    doc = json.loads(out)
    assert doc["predicates"] == {"Q": 2, "R": 0}
    assert doc["constants"] == ["c", "d"]


def test_parse_usage_error():
    status, out = run("parse", "--phi", "P(c")
    assert status == 2
    assert "error" in out


def test_unknown_command():
    status, _out = run("frobnicate")
    assert status == 2


def test_closure_lists_members():
    status, out = run("closure", "--gamma", "forall y. exists x. (P(x) -> P(y))",
                      "--delta", "c")
    assert status == 0
    lines = out.strip().splitlines()
    assert "P(c)" in lines
    assert "P(c) -> P(c)" in lines
    assert len(lines) == 4


def test_check_finds_countermodel_exit_1():
    status, out = run("check", "--phi", "P(c) | ~P(c)",
                      "--worlds", "2", "--dom", "1")
    assert status == 1
    assert "countermodel" in out


def test_check_no_countermodel_exit_0():
    status, out = run("check", "--o", "", "--phi", CASARI,
                      "--worlds", "3", "--dom", "2")
    assert status == 0
    assert "no countermodel at bounds" in out


def test_solve_opponent_win_exit_1():
    status, out = run("solve", "--phi", "P(c) | ~P(c)", "--budget", "0")
    assert status == 1
    assert "opponent" in out


def test_solve_structured_verdict():
    status, out = run("solve", "--phi", "P(c) | ~P(c)", "--budget", "0",
                      "--format", "structured")
    assert status == 1
    doc = json.loads(out)
    assert doc["winner"] == "opponent"
    assert doc["budget"] == 0
    assert doc["decisions"]


def test_solve_proponent_win_exit_0():
    status, out = run("solve", "--phi", "P(c) -> P(c)", "--budget", "1")
    assert status == 0
    assert "proponent" in out


def test_solve_inconclusive_exit_3():
    status, out = run("solve", "--phi", CASARI, "--budget", "2",
                      "--nodes", "2")
    assert status == 3
    assert "inconclusive" in out


def test_play_and_replay_and_extract(tmp_path):
    script = tmp_path / "prop.json"
    script.write_text(json.dumps([{"add": ["~P(c)"]}]))
    trace_file = tmp_path / "game.trace"
    status, out = run("play", "--phi", "P(c) | ~P(c)",
                      "--opponent", "solver:1",
                      "--proponent", f"scripted:{script}",
                      "--trace-out", str(trace_file))
    assert status == 0
    assert "winner: opponent" in out

    status, out = run("replay", "--trace", str(trace_file))
    assert status == 0
    assert "winner: opponent" in out

    model_file = tmp_path / "model.yaml"
    status, out = run("extract", "--trace", str(trace_file),
                      "--out", str(model_file))
    assert status == 0
    assert "worlds:" in model_file.read_text()


def test_play_scripted_game2(tmp_path):
    script = tmp_path / "opp.json"
    script.write_text(json.dumps([
        {"fresh": ["α1"],
         "add": ["~P(c)", "exists x. P(x)", "P(α1)"]},
    ]))
    status, out = run("play", "--phi", "~P(c) -> ~(exists x. P(x))",
                      "--opponent", f"scripted:{script}",
                      "--proponent", "saturation")
    assert status == 0
    assert "winner: opponent" in out


def test_structured_output_is_deterministic():
    a = run("solve", "--phi", "P(c) | ~P(c)", "--budget", "1",
            "--format", "structured")
    b = run("solve", "--phi", "P(c) | ~P(c)", "--budget", "1",
            "--format", "structured")
    assert a == b


def test_missing_file_is_usage_error():
    status, out = run("replay", "--trace", "/nonexistent/file.trace")
    assert status == 2
    assert "error" in out


def test_play_from_model_file(tmp_path):
    model = tmp_path / "em.yaml"
    model.write_text(
        "worlds: [w0, w1]\n"
        "order: [[w0, w1]]\n"
        "domain: {w0: [c], w1: [c]}\n"
        "atoms: {w1: ['P(c)']}\n")
    status, out = run("play", "--phi", "P(c) | ~P(c)",
                      "--opponent", f"from-model:{model}:w0",
                      "--proponent", "saturation")
    assert status == 0
    assert "winner: opponent" in out


def test_closure_with_signature_file(tmp_path):
    sig = tmp_path / "sig.txt"
    sig.write_text("pred P/1\nconst c\n")
    status, out = run("closure", "--gamma", "forall x. P(x)",
                      "--delta", "c,α1", "--sig", str(sig))
    assert status == 0
    lines = out.strip().splitlines()
    assert "P(α1)" in lines and "P(c)" in lines

import json
import subprocess
import sys
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from carmech import SampleSpace, enumerate_extremes, mixture
from carmech.cli import main
from carmech.formats import ParseError, from_json, load_document, parse_text, render, to_json
from carmech.multicover import to_multicover
from carmech.simulate import ProceduralModel
from carmech.verify import expand
from conftest import part

TRIANGLE_TEXT = """\
# the triangle mechanism
space n=3
set {1,2} p 1/2
set {2,3} p 1/2
set {1,3} p 1/2
"""

PARTITION_TEXT = "space n=3\nset {1,2} p 1\nset {3} p 1\n"
MIXED_TEXT = "space n=3\nset {1} p 1/2\nset {2} p 1/2\nset {3} p 1/2\nset {1,2,3} p 1/2\n"


def write(tmp_path, name, text):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


# -- formats -----------------------------------------------------------------


def test_parse_car(triangle):
    doc = parse_text(TRIANGLE_TEXT)
    assert doc.kind == "car" and doc.car() == triangle


def test_parse_conditional(triangle):
    doc = parse_text(render(expand(triangle)))
    assert doc.kind == "conditional" and doc.conditional() == expand(triangle)


def test_parse_multicover_and_model(triangle):
    mc = to_multicover(triangle)
    assert parse_text(render(mc)).multicover() == mc
    model = ProceduralModel((mc, to_multicover(part(3, [1, 2, 3]))), (Fraction(1, 3), Fraction(2, 3)))
    assert parse_text(render(model)).model() == model


@pytest.mark.parametrize("text, line, column, fragment", [
    ("set {1} p 1\n", 1, 1, "missing 'space"),
    ("space n=3\nset {1,2} p 1/2\n  set {1,4} p 1/2\n", 3, 7, "4"),
    ("space n=3\nset {1,2} p 0.5\n", 2, 13, "fraction"),
    ("space n=3\nset {1,2} p 1/0\n", 2, 13, "zero denominator"),
    ("space n=3\nsets {1} p 1\n", 2, 1, "unrecognised"),
    ("space n=3\nset {1,1} p 1\n", 2, 5, "repeated"),
    ("space n=3\nset {1} p 1\nset {1} p 1\n", 3, 1, "duplicate"),
])
def test_parse_errors_report_position(text, line, column, fragment):
    with pytest.raises(ParseError) as info:
        parse_text(text)
    assert (info.value.line, info.value.column) == (line, column)
    assert fragment in str(info.value)


def test_parse_rejects_mixed_kinds():
    with pytest.raises(ParseError, match="mixes"):
        parse_text("space n=2\nset {1} p 1\nheight k=1\nset {2} mult 1\n")
    with pytest.raises(ParseError, match="height"):
        parse_text("space n=2\nset {1,2} mult 1\n")


def test_decimals_only_when_allowed():
    doc = parse_text("space n=1\nset {1} p 0.999\n", allow_decimal=True)
    assert doc.probs == {next(iter(SampleSpace(1).subsets())): 0.999}


def test_json_parse_errors():
    with pytest.raises(ParseError, match="invalid JSON"):
        load_document("{ not json")
    with pytest.raises(ParseError, match="fraction"):
        load_document(json.dumps({"type": "car", "n": 1, "probs": [{"set": [1], "p": {"num": 1}}]}))
    with pytest.raises(ParseError, match="unknown"):
        load_document(json.dumps({"type": "mystery", "n": 1}))


@st.composite
def mechanisms(draw):
    n = draw(st.integers(1, 4))
    catalog = enumerate_extremes(SampleSpace(n)).mechanisms
    picks = draw(st.lists(st.sampled_from(catalog), min_size=1, max_size=4))
    raw = draw(st.lists(st.integers(1, 40), min_size=len(picks), max_size=len(picks)))
    return mixture([(Fraction(r, sum(raw)), m) for r, m in zip(raw, picks)])


@settings(max_examples=60, deadline=None)
@given(mechanisms())
def test_text_and_json_round_trips_are_lossless(mech):
    for obj in (mech, expand(mech), to_multicover(mech), ProceduralModel.single(to_multicover(mech))):
        assert from_json(json.loads(json.dumps(to_json(obj)))) == obj
        doc = load_document(render(obj))
        again = {"car": doc.car, "conditional": doc.conditional,
                 "multicover": doc.multicover, "model": doc.model}[doc.kind]()
        assert again == obj


# -- commands ----------------------------------------------------------------


def test_verify_triangle(tmp_path, capsys):
    code, out, _ = run(capsys, "verify", write(tmp_path, "t.car", TRIANGLE_TEXT))
    assert code == 0
    assert out.splitlines()[0] == "CAR: yes; support {1,2},{1,3},{2,3}; extreme: yes; CCAR: no"
    assert "set {1,2} p 1/2" in out


def test_verify_partition(tmp_path, capsys):
    code, out, _ = run(capsys, "verify", write(tmp_path, "p.car", PARTITION_TEXT))
    assert code == 0 and "CAR: yes" in out and "CCAR: yes" in out


def test_verify_broken_normalization(tmp_path, capsys):
    text = "space n=3\nset {1,2} p 2/5\nset {1,3} p 1/2\nset {2,3} p 1/2\nset {3} p 0\nset {2} p 1/10\n"
    code, _, err = run(capsys, "verify", write(tmp_path, "b.car", text))
    assert code == 2 and "element 1" in err and "9/10" in err


def test_verify_not_car(tmp_path, capsys):
    text = ("space n=2\ngiven 1 set {1,2} p 1/2\ngiven 1 set {1} p 1/2\n"
            "given 2 set {1,2} p 1/4\ngiven 2 set {2} p 3/4\n")
    code, out, _ = run(capsys, "verify", write(tmp_path, "c.txt", text))
    assert code == 1 and out.startswith("CAR: no")
    code, out, _ = run(capsys, "verify", "--json", write(tmp_path, "c.txt", text))
    assert code == 1 and json.loads(out)["witness"]["set"] == [1, 2]


def test_verify_conditional_car(tmp_path, capsys, triangle):
    code, out, _ = run(capsys, "verify", write(tmp_path, "e.txt", render(expand(triangle))))
    assert code == 0 and "CAR: yes" in out


def test_missing_file_and_bad_args(capsys):
    assert run(capsys, "verify", "/nonexistent/file")[0] == 2
    assert run(capsys, "extremes")[0] == 2
    assert run(capsys, "bogus")[0] == 2
    assert run(capsys, "simulate", "x", "--seed", "-1")[0] == 2


def test_extremes(capsys):
    code, out, _ = run(capsys, "extremes", "--n", "3")
    assert code == 0 and out.splitlines()[0] == "6 extreme mechanisms on n=3"
    assert len(out.splitlines()) == 7
    code, out, _ = run(capsys, "extremes", "--n", "3", "--json")
    assert json.loads(out)["count"] == 6
    assert run(capsys, "extremes", "--n", "6")[0] == 1


def test_decompose(tmp_path, capsys):
    path = write(tmp_path, "m.car", MIXED_TEXT)
    code, out, _ = run(capsys, "decompose", path)
    assert code == 0
    lines = out.splitlines()
    assert lines[0] == "2 extreme terms; remix exact: yes"
    assert all(line.startswith("weight 1/2") for line in lines[1:])
    data = json.loads(run(capsys, "decompose", "--json", path)[1])
    assert {(t["weight"]["num"], t["weight"]["den"]) for t in data["terms"]} == {(1, 2)}


def test_multicover_both_directions(tmp_path, capsys):
    code, out, _ = run(capsys, "multicover", write(tmp_path, "t.car", TRIANGLE_TEXT))
    assert code == 0 and out.splitlines()[:2] == ["space n=3", "height k=2"]
    mc_path = write(tmp_path, "t.mc", out)
    code, out, _ = run(capsys, "multicover", mc_path)
    assert code == 0 and out.splitlines()[:2] == ["height 2; extreme: yes", "sub-multicover: none"]
    stacked = "space n=3\nheight k=2\nset {1} mult 1\nset {2} mult 1\nset {3} mult 1\nset {1,2,3} mult 1\n"
    code, out, _ = run(capsys, "multicover", write(tmp_path, "s.mc", stacked))
    assert code == 0 and "extreme: no" in out and "sub-multicover: k=1" in out


def test_ccar(tmp_path, capsys):
    assert run(capsys, "ccar", write(tmp_path, "t.car", TRIANGLE_TEXT))[:2] == (1, "CCAR: no\n")
    code, out, _ = run(capsys, "ccar", write(tmp_path, "m.car", MIXED_TEXT))
    assert code == 0 and out.splitlines()[0] == "CCAR: yes" and len(out.splitlines()) == 3


def test_fibonacci(capsys):
    code, out, _ = run(capsys, "fibonacci", "--n", "9", "--verify")
    assert code == 0
    lines = out.splitlines()
    assert lines[1] == "0 1 1 1 1 1 1 1 1" and lines[9] == "1 0 1 0 1 0 1 0 1"
    assert lines[-1] == "height = 34 = F_9, Fibonacci closed form verified"
    code, out, _ = run(capsys, "fibonacci", "--n", "5", "--verify", "--json")
    data = json.loads(out)
    assert data["height"] == 5 and data["z"][0] == {"num": 3, "den": 5}
    assert run(capsys, "fibonacci", "--n", "4", "--verify")[0] == 1
    assert run(capsys, "fibonacci", "--n", "4")[0] == 0


def test_simulate(tmp_path, capsys):
    path = write(tmp_path, "t.car", TRIANGLE_TEXT)
    code, out, _ = run(capsys, "simulate", path, "--samples", "20000", "--seed", "4")
    assert code == 0 and out.splitlines()[-1] == "gate: pass"
    again = run(capsys, "simulate", path, "--samples", "20000", "--seed", "4")[1]
    assert again == out
    data = json.loads(run(capsys, "simulate", path, "--samples", "2000", "--json")[1])
    assert data["passed"] and len(data["elements"]) == 3
    assert run(capsys, "simulate", path, "--samples", "10")[0] == 1


def test_simulate_model_file(tmp_path, capsys):
    text = ("space n=3\ncover w 1/2\nheight k=1\nset {1} mult 1\nset {2} mult 1\nset {3} mult 1\n"
            "cover w 1/2\nheight k=1\nset {1,2,3} mult 1\n")
    code, out, _ = run(capsys, "simulate", write(tmp_path, "m.model", text), "--samples", "5000")
    assert code == 0 and "gate: pass" in out


def test_rationalize(tmp_path, capsys):
    text = "space n=3\nset {1,2} p 0.3183099\nset {1,3} p 0.3183099\nset {2,3} p 0.3183099\nset {1,2,3} p 0.3633802\n"
    path = write(tmp_path, "d.car", text)
    assert run(capsys, "rationalize", path, "--epsilon", "1/1000")[0] == 2
    code, out, _ = run(capsys, "rationalize", path, "--from-decimal", "--epsilon", "1/1000")
    assert code == 0
    mech = parse_text(out).car()
    assert sum(mech[a] for a in mech.probs if 1 in a) == 1
    assert run(capsys, "rationalize", path, "--from-decimal")[0] == 2
    assert run(capsys, "rationalize", path, "--from-decimal", "--epsilon", "0")[0] == 2


def test_json_input_accepted(tmp_path, capsys, triangle):
    path = write(tmp_path, "t.json", json.dumps(to_json(triangle)))
    code, out, _ = run(capsys, "verify", "--json", path)
    assert code == 0
    data = json.loads(out)
    assert data["extreme"] and data["ccar"] is False
    assert from_json(data["mechanism"]) == triangle


def test_console_entry_point(tmp_path):
    path = write(tmp_path, "t.car", TRIANGLE_TEXT)
    proc = subprocess.run([sys.executable, "-m", "carmech", "verify", path], capture_output=True, text=True)
    assert proc.returncode == 0 and proc.stdout.startswith("CAR: yes")

import json
import subprocess
import sys

import pytest

from lipfree import cert as certmod
from lipfree.cli import EXIT_CAP, EXIT_OK, EXIT_REJECTED, EXIT_USAGE, run
from lipfree.metric import loads_space


def test_build_and_norm(tmp_path, capsys):
    assert run(["build", "diamond", "--n", "2", "--b", "4", "--out", str(tmp_path / "d.json")]) == EXIT_OK
    sp = loads_space((tmp_path / "d.json").read_text())
    assert len(sp) == 2 + 4 + 2 * 4 * 4
    assert run(["norm", "--space", str(tmp_path / "d.json"), "--vector", "1:1"]) == EXIT_OK
    doc = json.loads(capsys.readouterr().out)
    assert doc["norm"] == "4/1" and len(doc["dual"]) == len(sp)


def test_build_malpha_with_eps(tmp_path):
    out = tmp_path / "m.json"
    assert run(["build", "malpha", "--alpha", "w+1", "--trunc", "2", "--eps", "w:1/2", "--out", str(out)]) == EXIT_OK
    sp = loads_space(out.read_text())
    assert len(sp) > 2


def test_build_chain(tmp_path):
    run(["build", "m0", "--out", str(tmp_path / "m0.json")])
    args = ["build", "chain", "--space", str(tmp_path / "m0.json"), "--k", "3", "--s", "1/8", "--out", str(tmp_path / "c.json")]
    assert run(args) == EXIT_OK
    sp = loads_space((tmp_path / "c.json").read_text())
    assert len(sp) == 9 and max(sp.dist(0, i) for i in range(9)) == 1


def test_cert_gen_verify_and_reject(tmp_path):
    space, cert = tmp_path / "s.json", tmp_path / "c.json"
    args = ["cert-gen", "diamond", "--n", "2", "--k", "2", "--space-out", str(space), "--out", str(cert)]
    assert run(args) == EXIT_OK
    report = tmp_path / "r.txt"
    assert run(["cert-verify", "--space", str(space), "--cert", str(cert), "--report", str(report)]) == EXIT_OK
    assert report.read_text() == "VERIFIED eps=1/1 depth=4\n"
    bad = certmod.mutate(certmod.loads(cert.read_text()), "shrink_separator", 3)
    cert.write_text(certmod.dumps(bad))
    assert run(["cert-verify", "--space", str(space), "--cert", str(cert), "--report", str(report)]) == EXIT_REJECTED
    assert report.read_text().startswith("REJECTED node=") and "WeakSeparation" in report.read_text()


@pytest.mark.parametrize("extra", [["--n", "0", "--l", "2"], ["--n", "1", "--k", "1", "--l", "1"]])
def test_cert_gen_chain(tmp_path, extra):
    space, cert = tmp_path / "s.json", tmp_path / "c.json"
    assert run(["cert-gen", "chain", *extra, "--space-out", str(space), "--out", str(cert)]) == EXIT_OK
    assert run(["cert-verify", "--space", str(space), "--cert", str(cert)]) == EXIT_OK


def test_cert_gen_malpha(tmp_path, capsys):
    space, cert = tmp_path / "s.json", tmp_path / "c.json"
    args = ["cert-gen", "malpha", "--alpha", "w", "--trunc", "2", "--piece", "2", "--space-out", str(space), "--out", str(cert)]
    assert run(args) == EXIT_OK
    assert run(["cert-verify", "--space", str(space), "--cert", str(cert)]) == EXIT_OK
    assert capsys.readouterr().out == "VERIFIED eps=3/4 depth=5\n"


def test_peel_and_report(tmp_path, capsys):
    run(["build", "m0", "--out", str(tmp_path / "m0.json")])
    tr = tmp_path / "t.jsonl"
    args = ["peel", "--space", str(tmp_path / "m0.json"), "--eps", "1/4", "--transcript", str(tr), "--record", str(tmp_path / "p.record.json")]
    assert run(args) == EXIT_OK
    assert capsys.readouterr().out == "FirstEmpty(5)\n"
    assert len(tr.read_text().splitlines()) == 5
    assert run(["report", "--dir", str(tmp_path)]) == EXIT_OK
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "space,kind,eps,depth,verdict,ordinal"
    assert lines[1].split(",")[1:5] == ["peel", "1/4", "5", "FirstEmpty(5)"]


def test_config_file(tmp_path, capsys):
    run(["build", "m0", "--out", str(tmp_path / "m0.json")])
    conf = tmp_path / "conf.txt"
    conf.write_text(f"# peel settings\nspace = {tmp_path / 'm0.json'}\neps = 1/4\nmax_steps = 3\n")
    assert run(["--config", str(conf), "peel"]) == EXIT_OK
    assert capsys.readouterr().out == "StillNonempty(3)\n"
    # explicit flags win over the file
    assert run(["--config", str(conf), "peel", "--eps", "1"]) == EXIT_OK
    assert capsys.readouterr().out == "FirstEmpty(2)\n"
    conf.write_text("colour = red\n")
    assert run(["--config", str(conf), "peel"]) == EXIT_USAGE


def test_exit_codes(tmp_path):
    assert run([]) == EXIT_USAGE
    assert run(["build", "diamond", "--n", "7", "--b", "2"]) == EXIT_CAP
    assert run(["norm", "--space", str(tmp_path / "missing.json"), "--vector", "1:1"]) == EXIT_USAGE
    assert run(["build", "chain", "--space", "nope", "--k", "1"]) == EXIT_USAGE
    (tmp_path / "big.json").write_text("")
    run(["build", "diamond", "--n", "2", "--b", "2", "--out", str(tmp_path / "big.json")])
    assert run(["peel", "--space", str(tmp_path / "big.json"), "--eps", "1"]) == EXIT_CAP
    assert run(["peel", "--space", str(tmp_path / "big.json"), "--eps", "0.5"]) == EXIT_USAGE
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"labels": [0, 1, 2], "base": 0, "dist": [["0", "1", "3"], ["1", "0", "1"], ["3", "1", "0"]]}))
    assert run(["norm", "--space", str(bad), "--vector", "1:1"]) == EXIT_USAGE


def test_module_entry_point(tmp_path):
    out = subprocess.run(
        [sys.executable, "-m", "lipfree", "build", "m0"], capture_output=True, text=True, check=True
    ).stdout
    assert loads_space(out).dist(0, 1) == 1

import csv
import json
import subprocess
import sys

import pytest

from gafun.cli import EXIT_CONFIG, EXIT_NUMERIC, EXIT_OK, EXIT_VERDICT, main

OBJECTS = {"delta": {"type": "delta", "x0": 0.0},
           "inv": {"type": "expression", "text": "1/zeta"},
           "H": {"type": "heaviside"}}


def run(tmp_path, command, cfg, *extra, raw=None):
    path = tmp_path / "cfg.json"
    path.write_text(raw if raw is not None else json.dumps(dict({"version": 1, "objects": OBJECTS},
                                                               **cfg), indent=2))
    out = tmp_path / "out"
    code = main([command, "--config", str(path), "--out", str(out), *extra])
    return code, out


def report(out, command):
    return json.loads((out / f"{command}.json").read_text())


def rows(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def test_embed_writes_report_and_table(tmp_path):
    code, out = run(tmp_path, "embed", {"params": {"object": "delta"}, "budget": 500})
    assert code == EXIT_OK
    r = report(out, "embed")
    assert r["verdict"]["bound_ok"] and r["report"]["space"]["n"] == 2
    table = rows(out / "embed_norms.csv")
    assert table[0] == ["n", "estimate", "initial_estimate", "stable"] and len(table) == 4
    assert (out / "embed.meta.json").exists()


def test_reports_are_byte_identical(tmp_path):
    cfg = {"params": {"object": "delta"}, "budget": 400, "seed": 3}
    _, out = run(tmp_path, "norm", cfg)
    first = (out / "norm.json").read_bytes()
    _, out = run(tmp_path, "norm", cfg)
    assert (out / "norm.json").read_bytes() == first


def test_bad_json_reports_line(tmp_path, capsys):
    code, _ = run(tmp_path, "norm", {}, raw='{"version": 1,\n "params": {\n "object": }\n}')
    assert code == EXIT_CONFIG
    assert "line 3" in capsys.readouterr().err


def test_config_errors(tmp_path, capsys):
    code, _ = run(tmp_path, "norm", {"version": 2, "params": {"object": "delta"}})
    assert code == EXIT_CONFIG
    code, _ = run(tmp_path, "embed", {"params": {"object": "H"}})
    assert code == EXIT_CONFIG and "family" in capsys.readouterr().err
    objs = dict(OBJECTS, bad={"type": "expression", "text": "zeta^^2"})
    code, _ = run(tmp_path, "norm", {"objects": objs, "params": {"object": "bad"}})
    assert code == EXIT_CONFIG
    code, _ = run(tmp_path, "norm", {"params": {"object": "missing"}})
    assert code == EXIT_CONFIG


def test_unknown_command_is_usage_error(tmp_path):
    with pytest.raises(SystemExit) as info:
        main(["plot", "--config", "x.json"])
    assert info.value.code == EXIT_CONFIG


def test_numeric_failure(tmp_path):
    code, _ = run(tmp_path, "laurent", {"params": {"object": "inv", "x": 0.5, "n": 2}})
    assert code == EXIT_NUMERIC


def test_expect_mismatch(tmp_path):
    cfg = {"params": {"object": "delta", "x": 5.0}, "expect": {"residual": 1.0, "tol": 1e-3}}
    code, _ = run(tmp_path, "laurent", cfg)
    assert code == EXIT_VERDICT
    cfg["expect"] = {"residual": 0.0}
    assert run(tmp_path, "laurent", cfg)[0] == EXIT_OK


def test_psi_q0_table(tmp_path):
    cfg = {"params": {"sequence": {"template": "zeta^{p}", "range": [1, 12]}, "n": 2},
           "budget": 2000}
    code, out = run(tmp_path, "psi", cfg)
    assert code == EXIT_OK
    table = rows(out / "psi_q0.csv")
    assert table[0] == ["eps", "q0", "q0_grid"]
    assert [int(r[1]) for r in table[1:]] == [1, 2, 4, 6]
    assert report(out, "psi")["verdict"]["verified"]


def test_associate_delta_squared_diverges(tmp_path):
    objs = dict(OBJECTS, sq={"type": "expression", "text": "(zeta/(pi*(zeta^2 + z^2)))^2"})
    cfg = {"objects": objs, "params": {"object": "sq", "xi": {"start": 5e-4, "count": 12}}}
    code, out = run(tmp_path, "associate", cfg)
    assert code == EXIT_OK
    v = report(out, "associate")["verdict"]
    assert v["divergent"] and v["order"] == pytest.approx(1.0, abs=0.02)


def test_support_warning_recorded(tmp_path):
    cfg = {"params": {"object": "delta", "xi": {"start": 0.016, "count": 12}}}
    _, out = run(tmp_path, "associate", cfg)
    assert report(out, "associate")["report"]["warnings"]


def test_hull_command(tmp_path):
    cfg = {"params": {"generators": ["delta", "inv"], "weights": ["1/2", "1/2"]}}
    code, out = run(tmp_path, "hull", cfg)
    assert code == EXIT_OK and report(out, "hull")["report"]["mass"] == "1"
    cfg["params"]["weights"] = [1.5]
    cfg["expect"] = {"member": True}
    assert run(tmp_path, "hull", cfg)[0] == EXIT_VERDICT


def test_console_entry_point(tmp_path):
    path = tmp_path / "c.json"
    path.write_text(json.dumps({"version": 1, "objects": OBJECTS,
                                "params": {"object": "delta", "x": 5.0}}))
    p = subprocess.run([sys.executable, "-m", "gafun", "laurent", "--config", str(path),
                        "--out", str(tmp_path / "o")], capture_output=True, text=True)
    assert p.returncode == 0 and "laurent.json" in p.stdout

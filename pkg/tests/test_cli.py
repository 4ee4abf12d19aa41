import json
import subprocess
import sys

import pytest

from isosystolic.cli import RunConfig, main


def run(tmp_path, *args):
    return main([*args, "--out", str(tmp_path), "--no-timestamp"])


def test_solve_writes_tables(tmp_path):
    assert run(tmp_path, "solve", "--n", "3", "--nc", "2,4", "--kind", "both") == 0
    table = (tmp_path / "table_dual_n3.csv").read_text().splitlines()
    assert table[0] == "kind,N_c,A,P,rho2_origin,two_nu"
    assert table[1].startswith("dual,2,0.8053")
    rep = json.loads((tmp_path / "reports_primal_n3.json").read_text())
    assert rep["schema_version"] == 1 and "generated" not in rep
    assert [r["N_c"] for r in rep["reports"]] == [2, 4]


def test_outputs_are_deterministic(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for d in (a, b):
        assert run(d, "solve", "--n", "4", "--nc", "2,3", "--dump") == 0
    names = sorted(p.name for p in a.iterdir())
    assert names == sorted(p.name for p in b.iterdir())
    for name in names:
        assert (a / name).read_bytes() == (b / name).read_bytes(), name


def test_timestamp_header(tmp_path):
    assert main(["solve", "--nc", "2", "--out", str(tmp_path)]) == 0
    assert (tmp_path / "table_dual_n3.csv").read_text().startswith("# generated ")


def test_env_default_output(tmp_path, monkeypatch):
    monkeypatch.setenv("ISOSYSTOLIC_OUT", str(tmp_path / "env"))
    assert main(["solve", "--nc", "2", "--no-timestamp"]) == 0
    assert (tmp_path / "env" / "table_dual_n3.csv").exists()


def test_non_convergence_exit_code(tmp_path):
    code = run(tmp_path, "solve", "--n", "3", "--nc", "8", "--kind", "primal", "--max-iter", "100")
    assert code == 1
    rep = json.loads((tmp_path / "reports_primal_n3.json").read_text())
    assert rep["reports"][0]["converged"] is False


@pytest.mark.parametrize("args", [["solve", "--n", "2"], ["solve", "--nc", "0"], ["solve", "--nc", "a,b"],
                                  ["solve", "--kind", "both3"], ["nosuch"], ["solve", "--tol", "-1"]])
def test_usage_errors(tmp_path, args):
    with pytest.raises(SystemExit) as exc:
        main([*args, "--out", str(tmp_path)] if args[0] != "nosuch" else args)
    assert exc.value.code != 0


def test_geodesics(tmp_path):
    assert run(tmp_path, "geodesics", "--n", "3", "--nc", "4", "--levels", "3") == 0
    rows = (tmp_path / "geodesics_n3_nc4.csv").read_text().splitlines()
    assert rows[0] == "band,level,point_index,x,y"
    assert {r.split(",")[0] for r in rows[1:]} == {"1", "2", "3"}
    assert (tmp_path / "geodesics_n3_nc4.svg").read_text().count("<polyline") == 9


def test_converge(tmp_path):
    assert run(tmp_path, "converge", "--n", "3", "--nc", "2,3,4,5", "--quantity", "nu") == 0
    fit = json.loads((tmp_path / "converge_dual_nu_n3.json").read_text())["fit"]
    assert fit["quantity"] == "nu" and len(fit["samples"]) == 4
    assert run(tmp_path, "converge", "--nc", "2,3,4,5", "--quantity", "nu", "--kind", "primal") == 2


def test_rp2_check(tmp_path):
    assert run(tmp_path, "rp2-check", "--n", "10", "--grid", "6", "--bands", "4") == 0
    rep = json.loads((tmp_path / "rp2_check_n10.json").read_text())
    assert rep["passed"] and rep["checks"]["sum_rule_max_residual"] < 1e-8


def test_variational_check(tmp_path):
    assert run(tmp_path, "variational-check", "--points", "10") == 0
    rep = json.loads((tmp_path / "variational_check_n5.json").read_text())
    assert rep["checks"]["new_eom_max_residual"] < 1e-8


def test_compare_rp2(tmp_path):
    assert run(tmp_path, "compare-rp2", "--n", "4", "--nc", "4") == 0
    assert (tmp_path / "compare_rp2_n4_nc4.csv").read_text().startswith("side,x,y")


def test_run_config_validation():
    with pytest.raises(ValueError):
        RunConfig("solve", n=2)
    with pytest.raises(ValueError):
        RunConfig("solve", tol=0)


def test_module_entry_point(tmp_path):
    out = subprocess.run([sys.executable, "-m", "isosystolic", "rp2-check", "--grid", "3", "--out",
                          str(tmp_path)], capture_output=True, text=True)
    assert out.returncode == 0, out.stderr

import json
import subprocess
import sys
from pathlib import Path

import pytest

from timecons.cli import main
from timecons.newick import parse_gene_tree

DATA = Path(__file__).parent / "data"
WORKED = str(DATA / "worked_example.nwk")


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def write(tmp_path, name, text):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def test_solve_golden_report(capsys):
    code, out, _ = run(capsys, "solve", WORKED, "--json", "--emit-reconciliation")
    assert code == 0
    assert out == (DATA / "worked_example.solve.json").read_text()


def test_check_golden_report(capsys):
    code, out, _ = run(capsys, "check", WORKED, str(DATA / "worked_example.rejected.nwk"), "--json")
    assert code == 1
    assert out == (DATA / "worked_example.check.json").read_text()


def test_reports_are_byte_identical(capsys):
    outs = {run(capsys, "solve", WORKED, "--json")[1] for _ in range(3)}
    assert len(outs) == 1


def test_timing_is_opt_in(capsys):
    _, out, _ = run(capsys, "solve", WORKED, "--json", "--timing")
    assert set(json.loads(out)["timing_ms"]) == {"parse", "triplets", "solve"}
    _, out, _ = run(capsys, "solve", WORKED, "--json")
    assert "timing_ms" not in json.loads(out)


def test_solve_text_and_output_file(capsys, tmp_path):
    target = tmp_path / "out.txt"
    code, out, _ = run(capsys, "solve", WORKED, "-o", str(target))
    assert code == 0 and out == ""
    assert target.read_text() == "(((A,C),B),D);\n"


def test_no_solution_exit_code(capsys, tmp_path):
    gene = write(tmp_path, "g.nwk",
                 "(((a1@A,b1@B)[&ev=d],c1@C[&tr=1])[&ev=t],((a2@A,c2@C)[&ev=d],b2@B[&tr=1])[&ev=t])[&ev=d];")
    code, out, _ = run(capsys, "solve", gene, "--json")
    rep = json.loads(out)
    assert code == 1 and rep["verdict"] == "no_solution"
    assert rep["certificates"]["connected_good_split_graphs"]
    code, out, _ = run(capsys, "oracle", gene)
    assert code == 1 and out == "no solution\n"


def test_start_tree(capsys, tmp_path):
    start = write(tmp_path, "s.nwk", "((A,B,C),D);")
    code, out, _ = run(capsys, "solve", WORKED, "--start-tree", start)
    assert code == 0 and out == "(((A,C),B),D);\n"
    bad = write(tmp_path, "bad.nwk", "((A,B),(C,D,E));")
    code, _, err = run(capsys, "solve", WORKED, "--start-tree", bad)
    assert code == 2 and err.startswith("error:")


def test_check_consistent(capsys, tmp_path):
    s = write(tmp_path, "s.nwk", "(((A,C),B),D);")
    assert run(capsys, "check", WORKED, s) == (0, "consistent\n", "")
    code, out, _ = run(capsys, "check", WORKED, s, "--json", "--emit-reconciliation")
    rep = json.loads(out)
    assert rep["verdict"] == "consistent" and len(rep["reconciliation"]["genes"]) == 15


def test_triplets(capsys):
    assert run(capsys, "triplets", WORKED) == (0, "AB|D\nAC|D\n", "")


def test_species_map(capsys, tmp_path):
    gene = write(tmp_path, "g.nwk", "((a,b)[&ev=s],c)[&ev=s];")
    smap = write(tmp_path, "m.tsv", "a\tA\nb\tB\nc\tC\n")
    assert run(capsys, "triplets", gene, "--map", smap)[1] == "AB|C\n"


def test_validate(capsys, tmp_path):
    bad = write(tmp_path, "g.nwk", "(a@A,b@A)[&ev=s];")
    code, out, _ = run(capsys, "validate", bad)
    assert code == 1 and out.startswith("O3a\t")
    code, out, _ = run(capsys, "validate", bad, "--json")
    assert json.loads(out)["verdict"] == "invalid"
    assert run(capsys, "validate", WORKED) == (0, "valid\n", "")
    code, _, err = run(capsys, "solve", bad)
    assert code == 2 and "O3a" in err


@pytest.mark.parametrize("text", ["(a@A,b@B", "(a@A,b@B)[&ev=q];", "(a@A,b)[&ev=s];", ""])
def test_input_errors_exit_two(capsys, tmp_path, text):
    code, out, err = run(capsys, "solve", write(tmp_path, "g.nwk", text))
    assert code == 2 and out == "" and err.startswith("error:")


def test_missing_file(capsys, tmp_path):
    assert run(capsys, "solve", str(tmp_path / "nope.nwk"))[0] == 2


def test_oracle_serial_and_parallel(capsys):
    assert run(capsys, "oracle", WORKED) == (0, "(((A,C),B),D);\n", "")
    assert run(capsys, "oracle", WORKED, "--jobs", "2") == (0, "(((A,C),B),D);\n", "")
    assert run(capsys, "oracle", WORKED, "--limit", "3")[0] == 2


def test_gen_round_trip(capsys, tmp_path):
    code, out, _ = run(capsys, "gen", "--species", "5", "--genes-hint", "30", "--dup", "0.3", "--hgt", "0.5",
                       "--loss", "0.2", "--seed", "7")
    assert code == 0
    assert run(capsys, "gen", "--species", "5", "--genes-hint", "30", "--dup", "0.3", "--hgt", "0.5",
               "--loss", "0.2", "--seed", "7")[1] == out
    parse_gene_tree(out)
    assert run(capsys, "gen", "--species", "3", "--dup", "2")[0] == 2


def test_module_entry_point_stdin():
    text = Path(WORKED).read_text()
    proc = subprocess.run([sys.executable, "-m", "timecons", "solve", "-"], input=text, capture_output=True,
                          text=True, check=False)
    assert proc.returncode == 0 and proc.stdout == "(((A,C),B),D);\n"

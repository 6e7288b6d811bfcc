import csv
import json
import shutil
import subprocess
from pathlib import Path

import jsonschema
import numpy as np
import pytest

from folddecay.cli import SCHEMA_VERSION, dumps, main

SCHEMA = json.loads((Path(__file__).resolve().parents[1] / "docs" / "report.schema.json").read_text())


def run(argv, tmp_path):
    """Run the CLI in-process; return (exit code, parsed JSON report or None)."""
    out = tmp_path / "report.json"
    code = main(list(argv) + ["--json", str(out)])
    report = json.loads(out.read_text()) if out.exists() else None
    if report is not None:
        jsonschema.validate(report, SCHEMA)
        assert report["schema_version"] == SCHEMA_VERSION
    return code, report


def read_csv(path):
    with open(path) as fh:
        return list(csv.reader(fh))


def test_classify_examples(tmp_path):
    code, r = run(["classify", "fold-cubic"], tmp_path)
    assert code == 0 and r["reports"][0]["kind"] == "Fold"
    code, r = run(["classify", "cusp-standard"], tmp_path)
    assert code == 0 and r["reports"][0]["kind"] == "Cusp"
    assert r["reports"][0]["witnesses"]["cusp_discriminant"] == pytest.approx(-12, abs=1e-6)


def test_classify_exit_codes(tmp_path):
    assert run(["classify", "monkey-saddle", "--expect-class-c"], tmp_path)[0] == 2
    assert run(["classify", "monkey-saddle"], tmp_path)[0] == 0
    assert main(["classify", "no-such-surface"]) == 3


def test_classify_explicit_points(tmp_path):
    code, r = run(["classify", "paraboloid", "--point", "0.1", "0.2", "--no-gamma"], tmp_path)
    assert code == 0 and len(r["reports"]) == 1 and r["gamma_traces"] == []
    assert r["reports"][0]["kind"] == "Regular"


def test_region_examples(tmp_path):
    code, r = run(["region", "7/10", "9/70", "1", "0", "1/2", "1/2"], tmp_path)
    assert code == 0
    assert [v["label"] for v in r["verdicts"]] == ["RestrictedWeak", "Strong", "Outside"]


def test_region_batch_and_errors(tmp_path):
    b = tmp_path / "batch.json"
    b.write_text(json.dumps({"points": [["61/70", "3/10"], ["1", "3/10"]]}))
    code, r = run(["region", "--batch", str(b)], tmp_path)
    assert [v["label"] for v in r["verdicts"]] == ["RestrictedWeak", "WeakI"]
    b.write_text(json.dumps([[0.7, 0.1]]))
    assert main(["region", "--batch", str(b)]) == 3
    assert main(["region", "seven", "1"]) == 3
    assert main(["region", "1/2"]) == 3
    assert main(["region"]) == 3


def test_decay_oscillatory_fold(tmp_path):
    f = tmp_path / "s.csv"
    code, r = run(["decay", "fold-cubic", "--mode", "oscillatory", "--csv", str(f)], tmp_path)
    assert code == 0 and abs(r["slope"] + 5 / 6) <= 0.05
    rows = read_csv(f)
    assert rows[0] == ["lambda", "drift_u", "drift_v", "magnitude"] and len(rows) == 13


def test_decay_zero_amplitude_exit_4(tmp_path):
    f = tmp_path / "z.csv"
    code, r = run(["decay", "cusp-standard", "--mode", "measure", "--amplitude", "zero", "--csv", str(f)],
                  tmp_path)
    assert code == 4 and r["fit"] is None and r["exit_code"] == 4
    rows = read_csv(f)
    assert len(rows) > 1 and all(float(row[-1]) == 0 for row in rows[1:])


def test_decay_residual_bound_exit_4(tmp_path):
    code, r = run(["decay", "paraboloid", "--n", "8", "--max", "1e3", "--max-residual", "1e-12"], tmp_path)
    assert code == 4 and r["fit"] is not None


def test_decay_measure_cusp_slope(tmp_path):
    code, r = run(["decay", "cusp-standard", "--mode", "measure"], tmp_path)
    assert code == 0 and abs(r["slope"] + 0.75) <= 0.05


def test_decay_dispersive_paraboloid(tmp_path):
    code, r = run(["decay", "paraboloid", "--mode", "dispersive", "--n", "8", "--max", "1e3"], tmp_path)
    assert code == 0 and abs(r["slope"] + 1) <= 0.05
    assert main(["decay", "no-symbol", "--mode", "dispersive"]) == 3


def test_lattice_examples(tmp_path):
    code, r = run(["lattice", "classify", "--a", "3"], tmp_path)
    assert code == 0 and r["in_class_C"] is False
    code, r = run(["lattice", "classify", "--a", "2.5", "--resolution", "128"], tmp_path)
    assert code == 0 and r["in_class_C"] is True
    assert main(["lattice", "classify", "--a", "2"]) == 6
    assert main(["lattice", "spectral", "--a", "3", "--x", "0", "0", "0"]) == 6
    assert main(["lattice", "classify"]) == 3


def test_lattice_spectral_and_mesh(tmp_path):
    f = tmp_path / "k.csv"
    code, r = run(["lattice", "spectral", "--a", "2.5", "--x", "0", "0", "0", "--x", "1", "2", "3",
                   "--csv", str(f)], tmp_path)
    assert code == 0
    assert abs(r["values"][0][3] - 0.286322435050795) <= 1e-8
    assert read_csv(f)[0] == ["x1", "x2", "x3", "re", "im"]
    obj = tmp_path / "m.obj"
    code, r = run(["lattice", "mesh", "--a", "1", "--obj", str(obj)], tmp_path)
    assert code == 0 and r["n_vertices"] > 1000 and obj.exists()


def test_lattice_resolvent_and_holder(tmp_path):
    code, r = run(["lattice", "resolvent", "--lam", "-1", "--delta", "1e-9", "--L", "3", "--N", "128"], tmp_path)
    assert code == 0 and abs(r["origin"][0] - 0.28186297622543416) <= 1e-8
    code, r = run(["lattice", "holder", "--lam", "2.4", "--N", "256", "--L", "2"], tmp_path)
    assert code == 0 and len(r["results"]) == 3


def test_determinism_byte_identical(tmp_path):
    outs = []
    for k, threads in enumerate(("1", "1", "2")):
        j, c = tmp_path / f"r{k}.json", tmp_path / f"r{k}.csv"
        assert main(["decay", "cusp-standard", "--n", "8", "--max", "1e3", "--threads", threads,
                     "--csv", str(c), "--json", str(j)]) == 0
        outs.append((j.read_bytes(), c.read_bytes()))
    assert outs[0] == outs[1] == outs[2]


def test_config_file(tmp_path):
    cfg = tmp_path / "c.toml"
    cfg.write_text('n = 8\nmax = 1000.0\nmax-residual = 0.5\n')
    code, r = run(["decay", "paraboloid", "--config", str(cfg)], tmp_path)
    assert code == 0 and len(r["scales"]) == 8 and max(r["scales"]) == pytest.approx(1e3)
    cfg.write_text('n = 8\ncolour = "red"\n')
    assert main(["decay", "paraboloid", "--config", str(cfg)]) == 3
    cfg.write_text('max_residual = -1\n')
    assert main(["decay", "paraboloid", "--config", str(cfg)]) == 3
    j = tmp_path / "c.json"
    j.write_text(json.dumps({"gamma_points": 2}))
    code, r = run(["classify", "cusp-standard", "--config", str(j)], tmp_path)
    assert code == 0 and len(r["reports"]) == 1 + 2 * len(r["gamma_traces"])


def test_catalog_env(tmp_path, monkeypatch):
    cat = tmp_path / "cat.toml"
    cat.write_text('[[surfaces]]\nname = "tilted"\ncoefficients = [[0, 2, 1.0], [3, 0, 2.0]]\n')
    monkeypatch.setenv("FOLDDECAY_CATALOG", str(cat))
    code, r = run(["classify", "tilted", "--no-gamma"], tmp_path)
    assert code == 0 and r["reports"][0]["kind"] == "Fold"
    monkeypatch.delenv("FOLDDECAY_CATALOG")
    assert main(["classify", "tilted"]) == 3
    code, r = run(["classify", "tilted", "--no-gamma", "--catalog", str(cat)], tmp_path)
    assert code == 0


def test_usage_errors_exit_3():
    assert main(["decay", "paraboloid", "--threads", "0"]) == 3
    assert main(["decay", "paraboloid", "--bogus"]) == 3
    assert main(["teleport"]) == 3


def test_dumps_sorted_and_clean():
    from fractions import Fraction
    text = dumps({"b": np.float64(np.inf), "a": [Fraction(1, 3), np.int64(2), np.bool_(True)]})
    assert json.loads(text) == {"a": ["1/3", 2, True], "b": None}
    assert text.index('"a"') < text.index('"b"')


@pytest.mark.skipif(shutil.which("folddecay") is None, reason="console script not installed")
def test_console_script():
    p = subprocess.run(["folddecay", "region", "1", "0"], capture_output=True, text=True)
    assert p.returncode == 0 and json.loads(p.stdout)["verdicts"][0]["label"] == "Strong"

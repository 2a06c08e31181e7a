import json
import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from kslab import cli, io
from kslab.errors import ConfigError


def write(tmp_path, name, obj):
    p = tmp_path / name
    p.write_text(json.dumps(obj))
    return p


def manifest(out):
    return json.loads((out / "manifest.json").read_text())


@given(st.floats(allow_nan=False, allow_infinity=False))
def test_csv_reals_roundtrip(x):
    assert float(io.fmt(x)) == x


def test_sequences_run(tmp_path):
    cfg = write(tmp_path, "c.json", {"schema_version": 1, "eps": 0.1, "gamma": 0.04, "K": 3})
    out = tmp_path / "o"
    assert cli.run("sequences", cfg, out) == 0
    header, rows = io.read_csv(out / "sequences.csv")
    assert header == ["k", "eps_k", "n_k"]
    assert [int(r[2]) for r in rows] == [1863715, 9318577, 46592887, 232964437]
    m = manifest(out)
    assert all(m["checks"].values())
    assert m["digests"]["sequences.csv"] == io.sha256(out / "sequences.csv")


def test_missing_key_exit_1(tmp_path, capsys):
    cfg = write(tmp_path, "c.json", {"schema_version": 1, "potential": {"kind": "iid"}, "L": 5, "seed": 1})
    assert cli.run("decay", cfg, tmp_path / "o") == 1
    assert "trials" in capsys.readouterr().err
    assert not (tmp_path / "o").exists()


def test_unknown_nested_key_reports_path(tmp_path, capsys):
    cfg = write(tmp_path, "c.json", {"schema_version": 1, "potential": {"kind": "iid", "sclae": 1}, "L": 5, "seed": 1})
    assert cli.run("construct", cfg, tmp_path / "o") == 1
    assert "potential.sclae" in capsys.readouterr().err


@pytest.mark.parametrize("seed", [-1, 2**64, 1.5, "7"])
def test_bad_seed_exit_1(tmp_path, seed):
    cfg = write(tmp_path, "c.json", {"schema_version": 1, "potential": {}, "L": 5, "seed": seed})
    assert cli.run("construct", cfg, tmp_path / "o") == 1


def test_seed_override_recorded(tmp_path):
    cfg = write(tmp_path, "c.json", {"schema_version": 1, "potential": {}, "L": 5, "seed": 1})
    assert cli.run("construct", cfg, tmp_path / "a", seed=9) == 0
    assert cli.run("construct", write(tmp_path, "d.json", {"schema_version": 1, "potential": {}, "L": 5, "seed": 9}), tmp_path / "b") == 0
    assert (tmp_path / "a" / "potential.csv").read_bytes() == (tmp_path / "b" / "potential.csv").read_bytes()
    assert manifest(tmp_path / "a")["seed_override"] == 9


def test_schema_version_checked(tmp_path):
    cfg = write(tmp_path, "c.json", {"schema_version": 2, "eps": 0.1, "gamma": 0.04, "K": 3})
    assert cli.run("sequences", cfg, tmp_path / "o") == 1


@pytest.mark.parametrize("kind", ["iid", "ks", "limit_periodic", "qp"])
def test_spectrum_each_construction(tmp_path, kind):
    pot = {"kind": kind}
    if kind == "ks":
        pot["functionals"] = {"2": {"1": 0.5}}
    cfg = write(tmp_path, "c.json", {"schema_version": 1, "potential": pot, "L": 20, "seed": 3})
    assert cli.run("spectrum", cfg, tmp_path / "o") == 0
    header, rows = io.read_csv(tmp_path / "o" / "spectrum.csv")
    assert header == ["k", "E"] and len(rows) == 41


def test_decay_deterministic_across_workers(tmp_path):
    base = {"schema_version": 1, "potential": {"kind": "iid"}, "L": 10, "trials": 150, "seed": 42}
    a = write(tmp_path, "a.json", base)
    b = write(tmp_path, "b.json", {**base, "workers": 3})
    assert cli.run("decay", a, tmp_path / "oa") == 0
    assert cli.run("decay", b, tmp_path / "ob") == 0
    assert (tmp_path / "oa" / "decay.csv").read_bytes() == (tmp_path / "ob" / "decay.csv").read_bytes()


def test_decay_bound_column(tmp_path):
    cfg = write(tmp_path, "c.json", {
        "schema_version": 1, "potential": {"kind": "iid"}, "L": 6, "trials": 20, "seed": 1,
        "bound": {"c": 0.1, "K0": 1.0, "lam": 1.0}, "fit_range": [1, 6],
    })
    assert cli.run("decay", cfg, tmp_path / "o") == 0
    header, rows = io.read_csv(tmp_path / "o" / "decay.csv")
    assert header == ["n", "mean", "stderr", "trials", "theoretical_bound"]
    assert "fit" in manifest(tmp_path / "o")


def test_diophantine_and_reimport(tmp_path):
    cfg = write(tmp_path, "c.json", {"schema_version": 1, "alpha": cli.dio.GOLDEN, "k_max": 12, "gap_k": 8})
    assert cli.run("diophantine", cfg, tmp_path / "o") == 0
    again = write(tmp_path, "d.json", {"schema_version": 1, "alpha": "unused", "k_max": 0, "convergents_file": str(tmp_path / "o" / "convergents.csv")})
    assert cli.run("diophantine", again, tmp_path / "p") == 0
    assert (tmp_path / "o" / "convergents.csv").read_bytes() == (tmp_path / "p" / "convergents.csv").read_bytes()


def test_verify_fault_injection_exit_2(tmp_path):
    cfg = write(tmp_path, "c.json", {"schema_version": 1, "seed": 0, "checks": ["jacobian"], "options": {"jacobian": {"seeds": 5}}, "fault_injection": "sign"})
    assert cli.run("verify", cfg, tmp_path / "o") == 2
    m = manifest(tmp_path / "o")
    assert any(name.startswith("jacobian_det") for name in m["failed"])


def test_verify_empty_checks_exit_1(tmp_path):
    cfg = write(tmp_path, "c.json", {"schema_version": 1, "seed": 0, "checks": []})
    assert cli.run("verify", cfg, tmp_path / "o") == 1


def test_verify_quick_checks_pass(tmp_path):
    cfg = write(tmp_path, "c.json", {"schema_version": 1, "seed": 0, "checks": ["gap", "summability", "holder", "limit_periodic"]})
    assert cli.run("verify", cfg, tmp_path / "o") == 0


def test_numerical_failure_exit_2(tmp_path):
    # precision exhausted: 50 digits cannot support 80 partial quotients
    cfg = write(tmp_path, "c.json", {"schema_version": 1, "alpha": cli.dio.PI_MINUS_3, "k_max": 80})
    assert cli.run("diophantine", cfg, tmp_path / "o") == 2
    assert not (tmp_path / "o").exists()


def test_main_entry(tmp_path):
    cfg = write(tmp_path, "c.json", {"schema_version": 1, "eps": 0.1, "gamma": 0.04, "K": 1})
    assert cli.main(["sequences", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 0


def test_parse_rejects_wrong_types():
    with pytest.raises(ConfigError) as e:
        io.parse(cli.SequencesConfig, {"schema_version": 1, "eps": "x", "gamma": 1.0, "K": 1})
    assert e.value.path == "eps"

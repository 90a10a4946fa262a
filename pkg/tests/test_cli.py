import os

import pytest

from nodaldiv.cli import main


def run(args, tmp_path, env_out=None, monkeypatch=None):
    if env_out is not None:
        monkeypatch.setenv("NODALDIV_OUT", str(env_out))
    elif monkeypatch is not None:
        monkeypatch.delenv("NODALDIV_OUT", raising=False)
    return main(args)


def test_generate_construct_verify_roundtrip(tmp_path, capsys):
    out = str(tmp_path / "run")
    assert main(["generate", "--preset", "sphere-equator", "--level", "0",
                 "--out", out]) == 0
    captured = capsys.readouterr().out
    assert "chi=2" in captured
    assert main(["construct", "--preset", "sphere-equator", "--level", "0",
                 "--out", out]) == 0
    for fname in ("mesh.off", "potential.txt", "eigenfunction.txt",
                  "ref_area.txt", "eigen_area.txt", "params.txt"):
        assert (tmp_path / "run" / fname).exists()
    assert main(["verify", "--from-files", "--out", out]) == 0
    assert (tmp_path / "run" / "report.txt").exists()
    assert main(["report", "--out", out]) == 0


def test_torus_generate_chi(tmp_path, capsys):
    out = str(tmp_path / "t")
    assert main(["generate", "--preset", "torus-two-meridians", "--out", out]) == 0
    assert "chi=0" in capsys.readouterr().out


def test_tampered_field_fails_verification(tmp_path, capsys):
    out = str(tmp_path / "run")
    assert main(["construct", "--preset", "sphere-equator", "--out", out]) == 0
    field = tmp_path / "run" / "eigenfunction.txt"
    lines = field.read_text().splitlines()
    idx, _ = lines[0].split()
    lines[0] = f"{idx} 0.5"
    field.write_text("\n".join(lines) + "\n")
    assert main(["verify", "--from-files", "--out", out]) == 1
    report = (tmp_path / "run" / "report.txt").read_text()
    assert ".pass = false" in report
    assert main(["report", "--out", out]) == 1


def test_missing_mesh_is_input_error(tmp_path):
    out = str(tmp_path / "empty")
    assert main(["verify", "--from-files", "--out", out]) == 3


def test_bad_spec_file_names_circle(tmp_path, capsys):
    spec = tmp_path / "bad.spec"
    spec.write_text(
        "[circles]\nc0 = 16\nc1 = 16\n"
        "[minus]\np = 0 c0 c1\n"
        "[plus]\np = 0 c0\n"
    )
    code = main(["generate", "--spec-file", str(spec), "--out",
                 str(tmp_path / "o")])
    assert code == 3
    err = capsys.readouterr().err
    assert "c1" in err


def test_spec_file_build(tmp_path, capsys):
    spec = tmp_path / "surface.spec"
    spec.write_text(
        "[circles]\nc0 = 16\n"
        "[minus]\npiece = 1 c0\n"
        "[plus]\npiece = 1 c0\n"
        "[surface]\ncollar_rings = 8\n"
    )
    out = str(tmp_path / "o")
    assert main(["generate", "--spec-file", str(spec), "--out", out]) == 0
    assert "chi=-2" in capsys.readouterr().out


def test_retry_exhaustion_is_construction_failure(tmp_path):
    out = str(tmp_path / "run")
    code = main(["construct", "--preset", "sphere-equator", "--rho0", "1e9",
                 "--out", out])
    assert code == 2


def test_config_file_and_unknown_key(tmp_path):
    good = tmp_path / "run.cfg"
    good.write_text("[run]\npreset = sphere-equator\nlevel = 0\nrho0 = 0.2\n")
    out = str(tmp_path / "cfgout")
    assert main(["generate", "--config", str(good), "--out", out]) == 0
    bad = tmp_path / "bad.cfg"
    bad.write_text("[run]\npreset = sphere-equator\nwibble = 3\n")
    assert main(["generate", "--config", str(bad), "--out", out]) == 3


def test_env_var_overrides_out(tmp_path, monkeypatch):
    target = tmp_path / "envout"
    monkeypatch.setenv("NODALDIV_OUT", str(target))
    assert main(["generate", "--preset", "sphere-equator"]) == 0
    assert (target / "mesh.off").exists()


def test_sweep_writes_csv(tmp_path):
    out = str(tmp_path / "sweep")
    assert main(["sweep", "--preset", "sphere-equator", "--levels", "0..1",
                 "--out", out]) == 0
    csv = (tmp_path / "sweep" / "sweep.csv").read_text().splitlines()
    assert csv[0] == "level,h,eigen_residual,min_Omega,min_contact,seam_worst"
    assert len(csv) == 3
    r0 = float(csv[1].split(",")[2])
    r1 = float(csv[2].split(",")[2])
    assert r1 < r0


def test_verify_reports_are_reproducible(tmp_path):
    out1, out2 = str(tmp_path / "a"), str(tmp_path / "b")
    for out in (out1, out2):
        assert main(["verify", "--preset", "sphere-equator", "--level", "0",
                     "--out", out]) == 0
    r1 = (tmp_path / "a" / "report.txt").read_bytes()
    r2 = (tmp_path / "b" / "report.txt").read_bytes()
    assert r1 == r2


def test_exit_code_contract_values():
    from nodaldiv.cli import EXIT_CONSTRUCT, EXIT_INPUT, EXIT_OK, EXIT_VERIFY
    assert (EXIT_OK, EXIT_VERIFY, EXIT_CONSTRUCT, EXIT_INPUT) == (0, 1, 2, 3)

import json
import re
import xml.etree.ElementTree as ET

import pytest

import vpfp.cli as cli
from vpfp.cli import main, run_convergence_sweep
from vpfp.config import ConfigError, load_config, parse_config

TINY = {
    "epsilon": 0.2,
    "epsilons": [0.2, 0.14, 0.1],
    "T_final": 0.05,
    "Nx": 32,
    "Nv": 64,
    "N_min": 20,
    "diag_interval": 0.0125,
}


def write_config(tmp_path, data, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(data), encoding="utf-8")
    return path


# ---------------------------------------------------------------- parsing


def test_minimal_config_fills_defaults():
    cfg = parse_config({"epsilon": 0.1, "T_final": 0.5})
    assert (cfg.Nx, cfg.Nv, cfg.Vmax) == (128, 256, 8.0)
    assert cfg.p_list == (2, 4)
    assert cfg.init.rho0.modes == ((1, 0.5),)
    assert cfg.init.rhoi.modes == ()
    assert cfg.resolved_interval() == pytest.approx(0.5 / 64)


def test_rejects_zero_epsilon():
    with pytest.raises(ConfigError, match="epsilon"):
        parse_config({"epsilon": 0.0})


def test_rejects_unknown_key_by_name():
    with pytest.raises(ConfigError, match="epsilonn"):
        parse_config({"epsilonn": 0.1})
    err = None
    try:
        parse_config({"epsilonn": 0.1})
    except ConfigError as exc:
        err = exc
    assert err.field == "epsilonn"


def test_rejects_nested_unknown_key():
    with pytest.raises(ConfigError, match="init.rho0.amplitude"):
        parse_config({"init": {"rho0": {"mean": 1.0, "amplitude": 2}}})


def test_rejects_duplicate_epsilons():
    with pytest.raises(ConfigError, match="duplicate"):
        parse_config({"epsilons": [0.2, 0.2, 0.1]})


def test_rejects_wrong_dimension():
    with pytest.raises(ConfigError, match="d"):
        parse_config({"d": 2})


def test_rejects_epsilon_above_one():
    with pytest.raises(ConfigError):
        parse_config({"epsilon": 1.5})


def test_rejects_bad_exponents():
    with pytest.raises(ConfigError, match="p_list"):
        parse_config({"p_list": [1]})
    with pytest.raises(ConfigError, match="p_list"):
        parse_config({"p_list": []})


def test_rejects_negative_horizon():
    with pytest.raises(ConfigError, match="T_final"):
        parse_config({"T_final": -1.0})


def test_rejects_bad_cosine_entry():
    with pytest.raises(ConfigError, match=re.escape("init.rho0.cosines[0]")):
        parse_config({"init": {"rho0": {"mean": 1.0, "cosines": [[1]]}}})


def test_load_config_reports_invalid_json(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text("{not json", encoding="utf-8")
    with pytest.raises(ConfigError, match="invalid JSON"):
        load_config(path)


def test_resolved_config_echo():
    cfg = parse_config(TINY)
    echo = cfg.to_dict()
    assert echo["Nx"] == 32 and echo["epsilon"] == 0.2
    assert echo["init"]["rho0"]["cosines"] == [[1, 0.5]]
    json.dumps(echo)  # must be serializable


# -------------------------------------------------------------- CLI: runs


def test_cli_run_outputs_and_determinism(tmp_path):
    cfg_path = write_config(tmp_path, TINY)
    out1, out2 = tmp_path / "r1", tmp_path / "r2"
    assert main(["run", "--config", str(cfg_path), "--out", str(out1)]) == 0
    assert main(["run", "--config", str(cfg_path), "--out", str(out2)]) == 0
    csv1 = (out1 / "diagnostics.csv").read_bytes()
    assert csv1 == (out2 / "diagnostics.csv").read_bytes()
    header = csv1.decode().splitlines()[0]
    assert header == (
        "t,mass,lp_norm_p2,lp_norm_p4,f_minus_rhoeps_M_l2,rhoeps_minus_pieps_l2,"
        "pieps_minus_rho_l2,field_discrepancy_inf,d2_dissipation"
    )
    manifest = json.loads((out1 / "manifest.json").read_text())
    assert manifest["config"]["Nx"] == 32
    assert manifest["code_version"]
    assert manifest["timings"]["wall_seconds"] > 0


def test_cli_fluid_outputs(tmp_path):
    cfg_path = write_config(tmp_path, TINY)
    out = tmp_path / "fl"
    assert main(["fluid", "--config", str(cfg_path), "--out", str(out)]) == 0
    lines = (out / "fluid.csv").read_text().splitlines()
    assert lines[0] == "t,mass,lp_norm_p2,lp_norm_p4,linf_norm"
    assert len(lines) == 2 + round(0.05 / 0.0125)


def test_cli_sweep_outputs_and_determinism(tmp_path):
    cfg_path = write_config(tmp_path, TINY)
    out1, out2 = tmp_path / "s1", tmp_path / "s2"
    assert main(["sweep", "--config", str(cfg_path), "--out", str(out1), "--jobs", "2"]) == 0
    assert main(["sweep", "--config", str(cfg_path), "--out", str(out2), "--jobs", "1"]) == 0
    assert (out1 / "sweep.csv").read_bytes() == (out2 / "sweep.csv").read_bytes()
    assert (out1 / "summary.json").read_bytes() == (out2 / "summary.json").read_bytes()
    rows = (out1 / "sweep.csv").read_text().splitlines()
    assert rows[0] == "epsilon,err_total,err_E1,err_E2,err_E3,field_disc_at_T"
    assert len(rows) == 4
    for eps in TINY["epsilons"]:
        sub = out1 / f"eps_{eps:g}"
        assert (sub / "diagnostics.csv").exists()
        assert (sub / "manifest.json").exists()
    summary = json.loads((out1 / "summary.json").read_text())
    assert set(summary["slopes"]) >= {"total", "E1", "E2", "E3", "field_discrepancy"}
    assert summary["partial"] is False


def test_cli_sweep_epsilons_override(tmp_path):
    cfg_path = write_config(tmp_path, TINY)
    out = tmp_path / "s3"
    code = main(
        ["sweep", "--config", str(cfg_path), "--out", str(out), "--epsilons", "0.2,0.15,0.1"]
    )
    assert code == 0
    rows = (out / "sweep.csv").read_text().splitlines()
    assert rows[1].startswith("0.2,")
    assert rows[2].startswith("0.15,")


def test_sweep_requires_three_epsilons():
    cfg = parse_config({**TINY, "epsilons": [0.2, 0.1]})
    with pytest.raises(ConfigError, match="epsilons"):
        run_convergence_sweep(cfg)


def test_sweep_records_partial_failures(tmp_path, monkeypatch):
    cfg = parse_config(TINY)
    real = cli.run_vpfp

    def flaky(run_cfg, **kwargs):
        if run_cfg.epsilon == 0.14:
            raise FloatingPointError("injected failure")
        return real(run_cfg, **kwargs)

    monkeypatch.setattr(cli, "run_vpfp", flaky)
    out = tmp_path / "partial"
    result = run_convergence_sweep(cfg, out_dir=out, jobs=1)
    assert 0.14 in result.failures
    assert set(result.runs) == {0.2, 0.1}
    summary = json.loads((out / "summary.json").read_text())
    assert summary["partial"] is True
    rows = (out / "sweep.csv").read_text().splitlines()
    assert len(rows) == 3  # header + two surviving runs


def test_cli_run_flushes_partial_diagnostics(tmp_path, monkeypatch, capsys):
    from vpfp.diagnostics import DiagnosticsRecord

    cfg_path = write_config(tmp_path, TINY)

    def doomed(run_cfg, sink=None, **kwargs):
        sink.emit(
            DiagnosticsRecord(
                t=0.0,
                mass=1.0,
                lp_norms={2: 1.0, 4: 1.0},
                f_minus_rhoeps_M_l2=0.0,
                rhoeps_minus_pieps_l2=0.0,
                pieps_minus_rho_l2=0.0,
                field_discrepancy_inf=0.0,
                d2_dissipation=0.0,
            )
        )
        raise FloatingPointError("injected mid-run failure")

    monkeypatch.setattr(cli, "run_vpfp", doomed)
    out = tmp_path / "aborted"
    code = main(["run", "--config", str(cfg_path), "--out", str(out)])
    assert code == 1
    assert "injected" in json.loads(capsys.readouterr().err)["error"]
    lines = (out / "diagnostics.csv").read_text().splitlines()
    assert len(lines) == 2  # header plus the one record emitted before abort


def test_validity_horizon_rejects_gamma_one():
    from vpfp.diagnostics import validity_horizon

    with pytest.raises(ValueError, match="gamma"):
        validity_horizon(1.0, 1.0, 1.0, 1.0, 0.1)


def test_cli_oracle_report(tmp_path):
    cfg_path = write_config(tmp_path, TINY)
    out = tmp_path / "orc"
    code = main(
        ["oracle", "--config", str(cfg_path), "--out", str(out), "--particles", "4000", "--time", "0.02"]
    )
    assert code == 0
    report = json.loads((out / "report.json").read_text())
    assert report["n_particles"] == 4000
    assert report["hist_l1"] >= 0.0


def test_cli_error_is_machine_readable(tmp_path, capsys):
    cfg_path = write_config(tmp_path, {"epsilonn": 1})
    code = main(["run", "--config", str(cfg_path), "--out", str(tmp_path / "x")])
    assert code == 2
    err = json.loads(capsys.readouterr().err)
    assert err["field"] == "epsilonn"


def test_cli_missing_config_file(tmp_path, capsys):
    code = main(["run", "--config", str(tmp_path / "nope.json"), "--out", str(tmp_path / "x")])
    assert code == 1
    err = json.loads(capsys.readouterr().err)
    assert "error" in err


def test_cli_run_requires_epsilon(tmp_path, capsys):
    cfg_path = write_config(tmp_path, {"T_final": 0.01, "Nx": 32, "Nv": 64})
    code = main(["run", "--config", str(cfg_path), "--out", str(tmp_path / "x")])
    assert code == 2
    assert json.loads(capsys.readouterr().err)["field"] == "epsilon"


def test_cli_seed_override(tmp_path):
    cfg_path = write_config(tmp_path, TINY)
    out = tmp_path / "orc_seeded"
    assert (
        main(
            [
                "oracle",
                "--config",
                str(cfg_path),
                "--out",
                str(out),
                "--particles",
                "2000",
                "--time",
                "0.01",
                "--seed",
                "77",
            ]
        )
        == 0
    )
    assert json.loads((out / "report.json").read_text())["seed"] == 77


# -------------------------------------------------------------- CLI: plot


def sweep_dir(tmp_path):
    cfg_path = write_config(tmp_path, TINY)
    out = tmp_path / "sw"
    assert main(["sweep", "--config", str(cfg_path), "--out", str(out)]) == 0
    return out


def test_plot_svg_structure(tmp_path):
    out = sweep_dir(tmp_path)
    plot_dir = tmp_path / "plots"
    assert main(["plot", "--csv", str(out / "sweep.csv"), "--out", str(plot_dir)]) == 0
    svg_path = plot_dir / "plot.svg"
    svg = svg_path.read_text()
    assert svg.count('class="marker-err_total"') == 3  # one marker per sweep point
    assert svg.count('class="marker-err_E1"') == 3
    root = ET.fromstring(svg)  # well-formed XML
    assert root.tag.endswith("svg")


def test_plot_tick_labels_increase(tmp_path):
    out = sweep_dir(tmp_path)
    plot_dir = tmp_path / "plots2"
    assert main(["plot", "--csv", str(out / "sweep.csv"), "--out", str(plot_dir)]) == 0
    svg = (plot_dir / "plot.svg").read_text()
    xs, ys = [], []
    for m in re.finditer(r'<text x="([\d.]+)" y="([\d.]+)" text-anchor="(middle|end)">([\d.e+-]+)</text>', svg):
        x, y, anchor, label = float(m[1]), float(m[2]), m[3], float(m[4])
        if anchor == "middle" and y > 400:
            xs.append((x, label))
        elif anchor == "end":
            ys.append((y, label))
    xs.sort()
    labels = [lab for _, lab in xs]
    assert labels == sorted(labels) and len(labels) >= 2
    ys.sort(reverse=True)  # bottom to top
    labels = [lab for _, lab in ys]
    assert labels == sorted(labels) and len(labels) >= 2


def test_plot_rejects_empty_and_malformed(tmp_path):
    empty = tmp_path / "empty.csv"
    empty.write_text("", encoding="utf-8")
    with pytest.raises(ValueError):
        cli.emit_plot(empty, tmp_path / "x.svg")
    headers_only = tmp_path / "h.csv"
    headers_only.write_text("epsilon,err_total,err_E1,err_E2,err_E3,field_disc_at_T\n")
    with pytest.raises(ValueError, match="no data"):
        cli.emit_plot(headers_only, tmp_path / "x.svg")
    malformed = tmp_path / "bad.csv"
    malformed.write_text("epsilon,err_total\n0.1,0.2\n")
    with pytest.raises(ValueError, match="malformed"):
        cli.emit_plot(malformed, tmp_path / "x.svg")

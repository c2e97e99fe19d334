import json
import subprocess
import sys

import pytest

from mobius_gg.cli import (
    DEFAULTS,
    EXIT_CONFIG,
    EXIT_OK,
    dump_config,
    load_config,
    main,
    resolve_config,
)
from mobius_gg.errors import ConfigurationError


def write_config(tmp_path, data):
    p = tmp_path / "cfg.json"
    p.write_text(json.dumps(data))
    return p


def strip_header(text):
    lines = text.splitlines()
    assert lines[0].startswith("# generated ")
    return "\n".join(lines[1:])


def test_config_round_trip():
    cfg = resolve_config({"sampling": {"n": 17}, "phi": {"kind": "h1"}})
    again = resolve_config(load_config(dump_config(cfg)))
    assert again == cfg
    assert cfg["sampling"]["seed"] == DEFAULTS["sampling"]["seed"]


@pytest.mark.parametrize("bad", [
    {"command": "nope"},
    {"sampling": {"n": 0}},
    {"colour": 1},
    {"isotopy": {"kind": "twist"}},
])
def test_bad_configs_are_rejected(bad):
    with pytest.raises(ConfigurationError):
        resolve_config(bad)


def test_print_defaults(capsys):
    assert main(["--print-defaults"]) == EXIT_OK
    out = capsys.readouterr().out
    assert '"command": "estimate"' in out
    assert "# sampling.n" in out


def test_trace_identity(tmp_path):
    cfg = write_config(tmp_path, {"isotopy": [{"kind": "identity"}]})
    assert main(["trace", "--config", str(cfg), "--out", str(tmp_path / "o")]) == EXIT_OK
    summary = json.loads((tmp_path / "o" / "summary.json").read_text())
    assert summary["result"]["report"]["word"] == "1"
    assert summary["config"]["command"] == "trace"
    assert "version" in summary
    assert (tmp_path / "o" / "trajectory.csv").exists()


def test_trace_two_puncture_twist(tmp_path):
    cfg = write_config(tmp_path, {"isotopy": [{"kind": "twist", "curve": "c_two_punctures"}]})
    assert main(["trace", "--config", str(cfg), "--out", str(tmp_path)]) == EXIT_OK
    summary = json.loads((tmp_path / "summary.json").read_text())
    assert summary["result"]["report"]["word_derived"] == "A"


def test_configuration_errors_exit_with_their_code(tmp_path):
    cfg = write_config(tmp_path, {"isotopy": [{"kind": "twist", "curve": "c_missing"}]})
    assert main(["trace", "--config", str(cfg), "--out", str(tmp_path)]) == EXIT_CONFIG
    summary = json.loads((tmp_path / "summary.json").read_text())
    assert summary["status"] == "configuration-error"
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert main(["--config", str(bad), "--out", str(tmp_path)]) == EXIT_CONFIG


def test_unknown_command_is_an_argument_error():
    with pytest.raises(SystemExit) as exc:
        main(["frobnicate"])
    assert exc.value.code == 2


def test_estimate_csv_is_reproducible(tmp_path):
    data = {"sampling": {"n": 120}, "isotopy": [{"kind": "band_slide", "a": 0.6, "d": 0.1}]}
    cfg = write_config(tmp_path, data)
    outs = []
    for k in range(2):
        out = tmp_path / f"run{k}"
        assert main(["estimate", "--config", str(cfg), "--seed", "3", "--out", str(out)]) == EXIT_OK
        outs.append(strip_header((out / "samples.csv").read_text()))
    assert outs[0] == outs[1]
    summary = json.loads((tmp_path / "run0" / "summary.json").read_text())
    assert summary["config"]["sampling"]["seed"] == 3
    assert summary["result"]["flux_oracle"] == pytest.approx(0.9)


def test_homogenize_and_survey_write_csv(tmp_path):
    cfg = write_config(tmp_path, {"sampling": {"n": 60, "p_max": 2},
                                  "survey": {"levels": 2, "samples": 40}})
    assert main(["homogenize", "--config", str(cfg), "--out", str(tmp_path / "h")]) == EXIT_OK
    assert main(["norm-survey", "--config", str(cfg), "--out", str(tmp_path / "s")]) == EXIT_OK
    assert len(strip_header((tmp_path / "h" / "homogenize.csv").read_text()).splitlines()) == 3
    assert len(strip_header((tmp_path / "s" / "norm_survey.csv").read_text()).splitlines()) == 3


def test_derive_table(tmp_path):
    assert main(["derive-table", "--out", str(tmp_path)]) == EXIT_OK
    table = json.loads((tmp_path / "generator_table.json").read_text())
    assert all(table["checks"].values())
    assert table["eta"]["1-"] == "R2"


def test_validate(tmp_path):
    assert main(["validate", "--out", str(tmp_path)]) == EXIT_OK
    res = json.loads((tmp_path / "summary.json").read_text())["result"]
    assert res["relations"] and res["density_ok"]
    assert res["cocycle"]["failed"] == 0


def test_injectivity_default_verdict(tmp_path):
    cfg = write_config(tmp_path, {"sampling": {"n": 2000}})
    assert main(["injectivity", "--config", str(cfg), "--out", str(tmp_path)]) == EXIT_OK
    rep = json.loads((tmp_path / "summary.json").read_text())["result"]["injectivity"]
    assert rep["verdict"] == "nonzero"


def test_module_entry_point(tmp_path):
    r = subprocess.run([sys.executable, "-m", "mobius_gg", "--print-defaults"],
                       capture_output=True, text=True, check=True)
    assert json.loads(r.stdout.split("\n#")[0])["command"] == "estimate"

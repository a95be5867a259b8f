import asyncio
import csv
import json

import httpx
import pytest
from pydantic import ValidationError

from bdm import SCHEMA_VERSION, cli, experiments, report
from bdm.errors import NumericalFailure
from bdm.schemas import DEFAULT_TOLERANCES, ExperimentConfig, Report
from bdm.service import app


def request(method, url, **kw):
    async def call():
        transport = httpx.ASGITransport(app=app)
        async with httpx.AsyncClient(transport=transport, base_url="http://bdm") as client:
            return await client.request(method, url, **kw)

    return asyncio.run(call())


# schemas ------------------------------------------------------------------------

def test_config_defaults_and_merge():
    cfg = ExperimentConfig(tolerances={"index": 1e-2})
    assert cfg.tol("index") == 1e-2
    assert cfg.tol("leftover") == DEFAULT_TOLERANCES["leftover"]
    assert cfg.schema_version == SCHEMA_VERSION


@pytest.mark.parametrize("bad", [
    {"tolerances": {"nonsense": 1.0}},
    {"schema_version": "9.0"},
    {"grid": {"N": 4}},
    {"experiment": "nope"},
    {"extra_field": 1},
    {"tolerances": {"index": -1.0}},
])
def test_config_rejects(bad):
    with pytest.raises(ValidationError):
        ExperimentConfig(**bad)


# reports -------------------------------------------------------------------------

@pytest.fixture(scope="module")
def trprime_report():
    return experiments.run(ExperimentConfig(experiment="trprime-check"))


def test_report_key_order(trprime_report):
    keys = list(json.loads(report.to_json(trprime_report)))
    assert keys == ["schema_version", "experiment", "status", "config", "checks", "index",
                    "tables", "calibration", "wall_time"]


def test_report_is_deterministic(trprime_report):
    again = experiments.run(ExperimentConfig(experiment="trprime-check"))
    assert report.stable_view(again) == report.stable_view(trprime_report)


def test_emit_and_load(tmp_path, trprime_report):
    written = report.emit(trprime_report, tmp_path / "out" / "r.json")
    assert written[0].name == "r.json"
    assert report.load(written[0]).model_dump() == trprime_report.model_dump()
    for path in written[1:]:
        rows = list(csv.DictReader(path.open()))
        assert rows


def test_emit_without_tables(tmp_path, trprime_report):
    assert len(report.emit(trprime_report, tmp_path / "r.json", tables=False)) == 1


def test_calibration_constants():
    cal = experiments.calibration()
    assert cal["sigma"] == 1.0
    assert cal["chern_c0"] == "+0-1i"


def test_threads_env(monkeypatch):
    monkeypatch.setenv("BDM_THREADS", "3")
    assert experiments.threads() == 3
    monkeypatch.setenv("BDM_THREADS", "zero")
    with pytest.raises(Exception) as err:
        experiments.threads()
    assert type(err.value).__name__ == "ConfigError"


# service --------------------------------------------------------------------------

def test_health_and_listing():
    assert request("GET", "/health").json()["schema_version"] == SCHEMA_VERSION
    assert "cyclic-check" in request("GET", "/experiments").json()


def test_run_endpoint():
    resp = request("POST", "/run", json={"experiment": "leftover-check"})
    assert resp.status_code == 200
    body = Report.model_validate(resp.json())
    assert body.status == "ok"
    assert body.checks[0].name == "leftover_max_defect"


def test_run_endpoint_validation_error():
    resp = request("POST", "/run", json={"experiment": "index-1d", "grid": {"N": 2}})
    assert resp.status_code == 422
    assert resp.json()["error"] == "ConfigError"


def test_run_endpoint_numerical_failure(monkeypatch):
    def boom(cfg, rep):
        raise NumericalFailure("singular block", check="trprime")

    monkeypatch.setitem(experiments.RUNNERS, "trprime-check", boom)
    resp = request("POST", "/run", json={"experiment": "trprime-check"})
    assert resp.status_code == 500
    assert resp.json() == {"schema_version": SCHEMA_VERSION, "error": "NumericalFailure",
                           "message": "singular block", "check": "trprime"}


# cli ------------------------------------------------------------------------------

def test_apply_override():
    cfg = cli.apply_override({}, "grid.N=256")
    cli.apply_override(cfg, "symbol.name=moebius")
    cli.apply_override(cfg, "symbol.params=[2, 1.5]")
    assert cfg == {"grid": {"N": 256}, "symbol": {"name": "moebius", "params": [2, 1.5]}}
    with pytest.raises(cli.UsageError):
        cli.apply_override(cfg, "novalue")
    with pytest.raises(cli.UsageError):
        cli.apply_override(cfg, "grid.N.x=1")


def test_cli_ok(tmp_path, capsys):
    out = tmp_path / "idx.json"
    code = cli.main(["index-1d", "--override", "symbol.params=[-2]", "--override", "grid.N=256",
                     "--override", "grid.L=30", "--out", str(out)])
    assert code == cli.EXIT_OK
    rep = report.load(out)
    assert rep.index.svd == -2
    assert "PASS" in capsys.readouterr().out


def test_cli_config_file(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"symbol": {"name": "moebius", "params": [1]},
                               "grid": {"N": 256, "L": 30}}))
    assert cli.main(["index-1d", "--config", str(cfg)]) == cli.EXIT_OK


def test_cli_checks_failed():
    assert cli.main(["trprime-check", "--override", "tolerances.trprime=1e-300"]) == cli.EXIT_CHECKS


@pytest.mark.parametrize("argv", [
    ["index-1d", "--override", "grid.N=2"],
    ["index-1d", "--override", "bogus"],
    ["index-1d", "--config", "/nonexistent.json"],
    ["index-1d", "--override", "symbol.name=unknown-symbol"],
])
def test_cli_config_errors(argv, capsys):
    assert cli.main(argv) == cli.EXIT_CONFIG
    assert "ConfigError" in capsys.readouterr().err


def test_cli_numerical_failure(monkeypatch, capsys):
    def boom(cfg, rep):
        raise NumericalFailure("diverged", check="leftover")

    monkeypatch.setitem(experiments.RUNNERS, "leftover-check", boom)
    assert cli.main(["leftover-check"]) == cli.EXIT_NUMERICAL
    err = capsys.readouterr().err
    assert "NumericalFailure: diverged" in err
    assert "failing check: leftover" in err


def test_cli_threads_env_error(monkeypatch):
    monkeypatch.setenv("BDM_THREADS", "-1")
    assert cli.main(["trprime-check"]) == cli.EXIT_CONFIG

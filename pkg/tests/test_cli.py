import json
from pathlib import Path

import pytest

from moduli_py.cli import main
from moduli_py.enums import ExitCode
from moduli_py.exceptions import DomainError
from moduli_py.moduli import ModuliClient
from moduli_py.schemas import Report


@pytest.fixture(autouse=True)
def no_cache(monkeypatch: pytest.MonkeyPatch):
    monkeypatch.delenv("RESIDUE_CACHE_DIR", raising=False)


def _report(capsys: pytest.CaptureFixture) -> Report:
    return Report.model_validate_json(capsys.readouterr().out)


def test_cli_pair(capsys: pytest.CaptureFixture):
    assert main(["pair", "--n", "2", "--d", "1", "--g", "2", "--eta", "eta0_expf2", "--out", "json"]) == ExitCode.OK
    report = _report(capsys)
    assert report.command == "pair"
    assert report.result == {"num": "-2", "den": "1"}

    eta = json.dumps({"a": {"2": 1}})
    assert main(["pair", "--g", "2", "--eta", eta, "--pad-f2", "--out", "json"]) == ExitCode.OK
    assert _report(capsys).result == {"num": "1", "den": "2"}

    assert main(["pair", "--g", "2", "--eta", eta]) == ExitCode.OK
    assert capsys.readouterr().out.strip().endswith("= 0")


def test_cli_usage_errors(capsys: pytest.CaptureFixture):
    assert main(["pair", "--eta", "{not json"]) == ExitCode.USAGE
    assert main(["pair", "--eta", "no_such_preset"]) == ExitCode.USAGE
    assert main(["pair", "--n", "1"]) == ExitCode.USAGE
    assert main(["pair", "--n", "2", "--d", "2"]) == ExitCode.USAGE
    assert main(["pair", "--g", "1"]) == ExitCode.USAGE
    assert main(["pair", "--eta", json.dumps({"a": {"3": 1}})]) == ExitCode.USAGE
    assert main(["pair", "--caps", "many"]) == ExitCode.USAGE
    assert main(["chern", "--eta", "thaddeus_invariant", "--r", "2"]) == ExitCode.USAGE
    assert "usage error" in capsys.readouterr().err
    with pytest.raises(SystemExit):
        main(["integrate"])


def test_cli_pontryagin_and_chern(capsys: pytest.CaptureFixture):
    assert main(["pontryagin", "--g", "3"]) == ExitCode.OK
    assert "PASS" in capsys.readouterr().out

    assert main(["chern", "--g", "2", "--eta", "thaddeus_invariant", "--out", "json"]) == ExitCode.OK
    report = _report(capsys)
    assert report.metadata["closed_form_agrees"]
    assert report.metadata["degree"] == 2
    assert report.result[2] == [{"num": "6", "den": "1"}]


def test_cli_verify(capsys: pytest.CaptureFixture):
    assert main(["verify", "--quick", "--inject-sign-error"]) == ExitCode.CHECK_FAILED
    assert "FAIL" in capsys.readouterr().out


def test_cli_cached_output(capsys: pytest.CaptureFixture, tmp_path: Path):
    argv = ["pair", "--g", "2", "--eta", "eta0_expf2", "--out", "json", "--cache-dir", str(tmp_path)]
    assert main(argv) == ExitCode.OK
    cold = capsys.readouterr().out
    assert main(argv) == ExitCode.OK
    warm = capsys.readouterr().out
    assert warm == cold
    assert Report.model_validate_json(warm).metadata["terms"][0]["weyl_terms"]


def test_cli_engine_errors(capsys: pytest.CaptureFixture, monkeypatch: pytest.MonkeyPatch):
    async def singular(self, rdg, spec):
        raise DomainError("leading term is nilpotent")

    monkeypatch.setattr(ModuliClient, "pair", singular)
    assert main(["pair", "--g", "2"]) == ExitCode.ENGINE_ERROR
    assert "error: leading term is nilpotent" in capsys.readouterr().err

    async def broken(self, rdg, spec):
        raise ValueError("not a usage problem")

    monkeypatch.setattr(ModuliClient, "pair", broken)
    with pytest.raises(ValueError):
        main(["pair", "--g", "2"])

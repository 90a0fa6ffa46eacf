import json

import pytest
from click.testing import CliRunner

from protoscope.cli import main
from protoscope.corpus import corpus_text


@pytest.fixture
def runner():
    return CliRunner()


def test_corpus_list(runner):
    result = runner.invoke(main, ["corpus", "list"])
    assert result.exit_code == 0
    assert result.output.split() == ["challenge", "ddg", "ns", "nsl"]


def test_corpus_run_ok_exit_zero(runner):
    result = runner.invoke(main, ["corpus", "run", "challenge", "--debug-lowe"])
    assert result.exit_code == 0
    assert "X(E,has(E,pa)) -> true" in result.output
    assert "via clause (b)" in result.output


def test_corpus_run_mismatch_exit_one(runner):
    result = runner.invoke(main, ["corpus", "run", "challenge", "--algorithm", "dolev-yao"])
    assert result.exit_code == 1
    assert "FAIL" in result.output


def test_corpus_run_unknown_name_exit_two(runner):
    result = runner.invoke(main, ["corpus", "run", "zzz"])
    assert result.exit_code == 2


def test_check_scenario_file(runner, tmp_path):
    path = tmp_path / "ddg.scn"
    path.write_text(corpus_text("ddg"))
    json_path = tmp_path / "report.json"
    dump_path = tmp_path / "system.json"
    result = runner.invoke(
        main,
        ["check", str(path), "--json", str(json_path), "--dump-system", str(dump_path)],
    )
    assert result.exit_code == 0
    report = json.loads(json_path.read_text())
    assert report["queries"][0]["verdict"] is True
    system = json.loads(dump_path.read_text())
    assert system["schema"] == 1


def test_check_parse_error_exit_two(runner, tmp_path):
    path = tmp_path / "bad.scn"
    path.write_text("scenario x\nagent A adversary\nwat\n")
    result = runner.invoke(main, ["check", str(path)])
    assert result.exit_code == 2
    assert "line 3" in result.output


def test_check_unknown_algorithm_exit_two(runner, tmp_path):
    path = tmp_path / "ddg.scn"
    path.write_text(corpus_text("ddg"))
    result = runner.invoke(main, ["check", str(path), "--algorithm", "rot13"])
    assert result.exit_code == 2


def test_usage_error_exit_two(runner):
    result = runner.invoke(main, ["check", "/nonexistent.scn"])
    assert result.exit_code == 2


def test_server_flag_posts_to_service(runner, tmp_path, monkeypatch):
    """The thin-client path: --server sends the scenario text and renders
    whatever report comes back."""
    from fastapi.testclient import TestClient
    from protoscope.service import create_app

    test_client = TestClient(create_app())
    calls = {}

    class _Shim:
        @staticmethod
        def post(url, json=None, timeout=None):
            calls["url"] = url
            path = url.split("testserver", 1)[1]
            return test_client.post(path, json=json)

    import protoscope.cli as cli_mod

    monkeypatch.setattr("httpx.post", _Shim.post)
    path = tmp_path / "challenge.scn"
    path.write_text(corpus_text("challenge"))
    result = runner.invoke(
        main, ["check", str(path), "--server", "http://testserver"]
    )
    assert calls["url"].endswith("/check")
    assert result.exit_code == 0
    assert "X(E,has(E,pa)) -> true" in result.output

    result = runner.invoke(
        main,
        ["corpus", "run", "challenge", "--algorithm", "dolev-yao", "--server", "http://testserver"],
    )
    assert result.exit_code == 1

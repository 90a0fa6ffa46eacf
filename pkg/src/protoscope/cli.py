"""Command line front end.

``check`` and ``corpus run`` execute in-process by default; with
``--server`` they become thin HTTP clients of a running service and print
the same report.  Exit codes: 0 all expectations met, 1 some query verdict
mismatched, 2 usage or scenario errors.
"""

from __future__ import annotations

import json
import sys
from typing import Optional

import click

from . import __version__
from .adversaries import UnknownAlgorithmError
from .corpus import UnknownCorpusError
from .scenario import ScenarioError, parse_scenario
from .systems import BoundExceededError, ProtocolError
from .workbench import corpus_list as _corpus_list
from .workbench import corpus_scenario, dump_system_json, run_scenario

_MODES = click.Choice(["passive", "insider", "outsider"])


def _echo_report(report_dict: dict) -> None:
    scenario = report_dict["scenario"]
    system = report_dict["system"]
    click.echo(
        f"scenario {scenario['name']}  mode={scenario['mode']}  "
        f"algorithm={scenario['algorithm']}"
    )
    click.echo(
        f"system: {system['runs']} runs, {system['points']} points"
        + (f", {system['truncated_runs']} truncated" if system["truncated_runs"] else "")
    )
    validators = report_dict["validators"]
    mp, adv = validators["mp"], validators["adversary"]
    click.echo(f"validators: {'ok' if not mp and not adv else 'VIOLATIONS'}")
    for line in mp + adv:
        click.echo(f"  ! {line}")
    for query in report_dict["queries"]:
        mark = "ok " if query["ok"] else "FAIL"
        verdict = "true" if query["verdict"] else "false"
        where = ""
        if query["witness"]:
            where = f" (witness run {query['witness']['run']} time {query['witness']['time']})"
        if query["counterexample"]:
            where = (
                f" (counterexample run {query['counterexample']['run']} "
                f"time {query['counterexample']['time']})"
            )
        click.echo(f"[{mark}] {query['quantifier']} {query['formula']} -> {verdict}{where}")
    for entry in report_dict["soundness"]:
        click.echo(
            f"soundness {entry['agent']}: Yes {entry['yes_answers']} answers / "
            f"{entry['yes_violations']} violations; No {entry['no_answers']} answers / "
            f"{entry['no_violations']} violations"
        )
    for found in report_dict["lowe_debug"]:
        click.echo(
            f"validator for guess {found['guess']}: "
            f"{{{', '.join(found['premises'])}}} -{found['tag']}-> {found['conclusion']} "
            f"via clause ({found['clause']})"
        )


def _finish(report_dict: dict, json_path: Optional[str]) -> None:
    if json_path:
        with open(json_path, "w", encoding="utf-8") as fh:
            json.dump(report_dict, fh, indent=2, sort_keys=True)
            fh.write("\n")
    _echo_report(report_dict)
    sys.exit(report_dict["exit_code"])


def _remote(server: str, path: str, payload: dict) -> dict:
    import httpx

    response = httpx.post(f"{server.rstrip('/')}{path}", json=payload, timeout=600.0)
    if response.status_code != 200:
        try:
            detail = response.json()
        except ValueError:
            detail = {"detail": response.text}
        click.echo(f"server error {response.status_code}: {detail.get('detail')}", err=True)
        for diag in detail.get("diagnostics", []):
            click.echo(f"  line {diag['line']}: {diag['message']}", err=True)
        sys.exit(2)
    return response.json()


def _report_errors(exc: Exception) -> None:
    if isinstance(exc, ScenarioError):
        click.echo("scenario has errors:", err=True)
        for diag in exc.diagnostics:
            click.echo(f"  {diag}", err=True)
    else:
        click.echo(str(exc), err=True)
    sys.exit(2)


@click.group()
@click.version_option(version=__version__, prog_name="protoscope")
def main() -> None:
    """Bounded symbolic protocol analysis under explicit adversary models."""


@main.command()
@click.argument("scenario_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--algorithm", help="Override the scenario's knowledge algorithm.")
@click.option("--mode", type=_MODES, help="Override the adversary mode.")
@click.option("--json", "json_path", type=click.Path(dir_okay=False), help="Write the JSON report here.")
@click.option("--dump-system", type=click.Path(dir_okay=False), help="Write the generated system as JSON.")
@click.option("--debug-lowe", is_flag=True, help="Record the validators found by the guessing algorithm.")
@click.option("--server", help="Run against a protoscope service instead of in-process.")
def check(scenario_path, algorithm, mode, json_path, dump_system, debug_lowe, server):
    """Analyze a scenario file and report its query verdicts."""
    with open(scenario_path, "r", encoding="utf-8") as fh:
        text = fh.read()
    if server:
        payload = {
            "scenario_text": text,
            "algorithm": algorithm,
            "mode": mode,
            "debug_lowe": debug_lowe,
        }
        _finish(_remote(server, "/check", payload), json_path)
        return
    try:
        scenario = parse_scenario(text)
        if dump_system:
            with open(dump_system, "w", encoding="utf-8") as fh:
                fh.write(dump_system_json(scenario, mode=mode, algorithm=algorithm))
                fh.write("\n")
        report = run_scenario(
            scenario, mode=mode, algorithm=algorithm, debug_lowe=debug_lowe
        )
    except (ScenarioError, UnknownAlgorithmError, ProtocolError, BoundExceededError) as exc:
        _report_errors(exc)
        return
    _finish(report.to_json_dict(), json_path)


@main.group()
def corpus() -> None:
    """Work with the shipped scenario corpus."""


@corpus.command("list")
def corpus_list_cmd() -> None:
    """List the shipped scenarios."""
    for name in _corpus_list():
        click.echo(name)


@corpus.command("run")
@click.argument("name")
@click.option("--algorithm", help="Override the scenario's knowledge algorithm.")
@click.option("--mode", type=_MODES, help="Override the adversary mode.")
@click.option("--json", "json_path", type=click.Path(dir_okay=False), help="Write the JSON report here.")
@click.option("--dump-system", type=click.Path(dir_okay=False), help="Write the generated system as JSON.")
@click.option("--debug-lowe", is_flag=True, help="Record the validators found by the guessing algorithm.")
@click.option("--server", help="Run against a protoscope service instead of in-process.")
def corpus_run_cmd(name, algorithm, mode, json_path, dump_system, debug_lowe, server):
    """Run one shipped scenario by name."""
    if server:
        payload = {"algorithm": algorithm, "mode": mode, "debug_lowe": debug_lowe}
        _finish(_remote(server, f"/corpus/{name}/run", payload), json_path)
        return
    try:
        scenario = corpus_scenario(name)
        if dump_system:
            with open(dump_system, "w", encoding="utf-8") as fh:
                fh.write(dump_system_json(scenario, mode=mode, algorithm=algorithm))
                fh.write("\n")
        report = run_scenario(
            scenario, mode=mode, algorithm=algorithm, debug_lowe=debug_lowe
        )
    except UnknownCorpusError as exc:
        click.echo(exc.args[0], err=True)
        sys.exit(2)
    except (ScenarioError, UnknownAlgorithmError, ProtocolError, BoundExceededError) as exc:
        _report_errors(exc)
        return
    _finish(report.to_json_dict(), json_path)


@main.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8000, show_default=True, type=int)
def serve(host: str, port: int) -> None:
    """Start the analysis service."""
    import uvicorn

    uvicorn.run("protoscope.service.app:app", host=host, port=port)


if __name__ == "__main__":
    main()

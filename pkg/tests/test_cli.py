import json

from orionnav.cli import main
from orionnav.harness import load_scenario
from orionnav.llm_gateway import load_transcript
from orionnav.library import scenario_a


def test_cli_run_bundled_scenario(tmp_path, capsys):
    rc = main(["run", "a01_monitor", "--seed", "1", "--out", str(tmp_path)])
    assert rc == 0
    out = capsys.readouterr().out
    assert "a01_monitor seed=1 task=0 ok" in out
    run_dir = tmp_path / "a01_monitor_seed1_oracle"
    assert (run_dir / "transcript.jsonl").exists()
    assert (run_dir / "grid.pgm").exists()
    assert (run_dir / "metrics.json").exists()


def test_cli_export_and_run_file(tmp_path, capsys):
    out = tmp_path / "exported.json"
    assert main(["export", "a02_potted_plant", str(out)]) == 0
    scn = load_scenario(out)
    assert scn.name == "a02_potted_plant"
    assert main(["run", str(out), "--seed", "2"]) == 0


def test_cli_suite_aggregates(tmp_path, capsys):
    manifest = tmp_path / "manifest.json"
    manifest.write_text(json.dumps({"scenarios": ["a01_monitor", "a03_chair"]}))
    rc = main(["suite", str(manifest), "--seed", "1", "--out", str(tmp_path / "report")])
    assert rc == 0
    out = capsys.readouterr().out
    assert "oracle: 2/2" in out
    assert (tmp_path / "report" / "summary.csv").exists()
    assert (tmp_path / "report" / "report.jsonl").exists()


def test_llm_record_and_replay_round_trip(tmp_path):
    from orionnav.harness import run_scenario
    from orionnav.llm_gateway import ReplayCompleter

    scn = scenario_a(0)
    completer = lambda messages: "goto(office-1, monitor-1)\nReasoning: it is mapped."
    m1 = run_scenario(scn, 1, "llm", out_dir=tmp_path / "rec", llm_completer=completer)
    assert m1[0].success
    rec_dir = tmp_path / "rec" / f"{scn.name}_seed1_llm"
    calls = load_transcript(rec_dir / "llm_calls.jsonl")
    assert len(calls) == 1

    replay = ReplayCompleter(calls)
    m2 = run_scenario(scn, 1, "llm", out_dir=tmp_path / "rep", llm_completer=replay)
    assert m2[0].success
    rep_dir = tmp_path / "rep" / f"{scn.name}_seed1_llm"
    assert (rec_dir / "transcript.jsonl").read_bytes() == (rep_dir / "transcript.jsonl").read_bytes()

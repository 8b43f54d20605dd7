"""
Tests for the command-line front end: subcommands, outputs and exit codes.
"""

import json
from io import StringIO
from pathlib import Path

import pytest

import sys
import os
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from swarmcoord.cli import EXIT_FAILS, EXIT_LIMIT, EXIT_OK, EXIT_USAGE, main
from swarmcoord.config import CONFIG_DIR, DEFAULT_RUNS
from swarmcoord.interp import parse_ispl

MODELS = Path(__file__).resolve().parent.parent / "models"

ONE_ROBOT = [
    "--set", "scenario.scenario=flocking_ispl",
    "--set", "scenario.robots=1",
    "--set", "scenario.arena.width=2",
    "--set", "scenario.arena.height=2",
]

COUNTER = """
Agent Counter
  Vars:
    n : 0..2;
  end Vars
  Actions = {inc, stay};
  Protocol:
    n < 2 : {inc, stay};
    Other : {stay};
  end Protocol
  Evolution:
    n = n + 1 if Action = inc;
  end Evolution
end Agent
Evaluation
  full if Counter.n = 2;
end Evaluation
InitStates
  Counter.n = 0;
end InitStates
Formulae
  EF full;
end Formulae
"""


def _run(*argv, inp=""):
    out = StringIO()
    code = main(list(argv), out=out, inp=StringIO(inp))
    return code, out.getvalue()


@pytest.fixture
def counter_file(tmp_path):
    path = tmp_path / "counter.ispl"
    path.write_text(COUNTER, encoding="utf-8")
    return str(path)


class TestParse:
    """Tests for the parse subcommand."""

    def test_shipped_listing(self):
        code, text = _run("parse", "--ispl", str(MODELS / "flocking_2robots.ispl"))
        assert code == EXIT_OK
        assert "agent Robot1" in text
        assert "[!]" not in text, "The shipped listing must parse without diagnostics"

    def test_pretty_print_to_file(self, counter_file, tmp_path):
        target = tmp_path / "pretty.ispl"
        code, _ = _run("parse", "--ispl", counter_file, "--output", str(target))
        assert code == EXIT_OK
        assert parse_ispl(target.read_text(encoding="utf-8")) == parse_ispl(COUNTER)

    def test_generated_model(self):
        code, text = _run("parse", *ONE_ROBOT)
        assert code == EXIT_OK
        assert "formula AF consensus" in text

    def test_syntax_error(self, tmp_path):
        path = tmp_path / "broken.ispl"
        path.write_text(COUNTER.replace("Protocol:", "Protocl:", 1), encoding="utf-8")
        code, text = _run("parse", "--ispl", str(path))
        assert code == EXIT_USAGE
        assert "[!] Syntax error at line 7" in text

    def test_not_an_interpreted_system(self):
        code, text = _run("parse", "--set", "scenario.scenario=foraging_scel")
        assert code == EXIT_USAGE
        assert "not an interpreted system" in text

    def test_missing_file(self, tmp_path):
        code, _ = _run("parse", "--ispl", str(tmp_path / "absent.ispl"))
        assert code == EXIT_USAGE


class TestSim:
    """Tests for the sim subcommand."""

    def test_zero_ticks_writes_empty_trace(self, tmp_path):
        target = tmp_path / "trace.jsonl"
        code, _ = _run("sim", "--config", str(CONFIG_DIR / "flocking_voter.json"),
                       "--max-ticks", "0", "--output", str(target))
        assert code == EXIT_OK
        lines = [json.loads(l) for l in target.read_text(encoding="utf-8").splitlines()]
        assert [l['type'] for l in lines] == ['header', 'end']
        assert lines[-1]['ticks'] == 0

    def test_identical_invocations_identical_files(self, tmp_path):
        """DEFAULT_RUNS repeated invocations write the first run's bytes every time."""
        def sim(path):
            code, _ = _run("sim", "--config", str(CONFIG_DIR / "flocking_vstig.json"),
                           "--seed", "12", "--max-ticks", "60", "--output", str(path))
            assert code == EXIT_OK
            return path.read_bytes()

        first = sim(tmp_path / "first.jsonl")
        for index in range(1, DEFAULT_RUNS):
            assert sim(tmp_path / f"run{index}.jsonl") == first, f"Run {index} differs from the first run"

    def test_trace_to_stdout(self):
        code, text = _run("sim", *ONE_ROBOT, "--max-ticks", "3")
        assert code == EXIT_OK
        assert '"type": "header"' in text


class TestCheck:
    """Tests for the check subcommand and its exit codes."""

    def test_double_credit_holds(self, tmp_path):
        target = tmp_path / "verdict.json"
        code, text = _run("check", "--config", str(CONFIG_DIR / "foraging_broadcast.json"),
                          "--output", str(target), "--witness")
        assert code == EXIT_OK
        assert "Result: HOLDS" in text
        assert "[0]" in text, "--witness prints the example path"
        verdict = json.loads(target.read_text(encoding="utf-8"))
        assert verdict['status'] == 'holds'
        assert verdict['witness']['kind'] == 'example'

    def test_formula_from_ispl_file(self, counter_file):
        code, text = _run("check", "--ispl", counter_file)
        assert code == EXIT_OK
        assert "CHECK EF full" in text

    def test_failing_property(self, counter_file, tmp_path):
        target = tmp_path / "cex.json"
        code, _ = _run("check", "--ispl", counter_file, "--formula", "AG !full", "--output", str(target))
        assert code == EXIT_FAILS
        verdict = json.loads(target.read_text(encoding="utf-8"))
        assert verdict['witness']['kind'] == 'counterexample'
        assert len(verdict['witness']['states']) == 3

    @pytest.mark.parametrize("formula", ["AG !full", "EF full", "AF full", "EG !full"])
    def test_verdict_files_do_not_depend_on_workers(self, counter_file, tmp_path, formula):
        written = []
        for workers in (1, 2, 4):
            target = tmp_path / f"verdict{workers}.json"
            _run("check", "--ispl", counter_file, "--formula", formula,
                 "--workers", str(workers), "--output", str(target))
            written.append(target.read_bytes())
        assert written[0] == written[1] == written[2]

    def test_resource_limit(self):
        code, text = _run("check", *ONE_ROBOT, "--formula", "AG consensus", "--budget", "1")
        assert code == EXIT_LIMIT
        assert "RESOURCE_LIMIT" in text

    def test_unknown_proposition(self, counter_file):
        code, _ = _run("check", "--ispl", counter_file, "--formula", "EF nowhere")
        assert code == EXIT_USAGE

    def test_no_formula(self):
        code, text = _run("check", "--config", str(CONFIG_DIR / "flocking_voter.json"))
        assert code == EXIT_USAGE
        assert "no formula" in text


class TestOtherCommands:
    """Tests for stats, estimate and step."""

    def test_stats(self, tmp_path):
        target = tmp_path / "stats.json"
        code, text = _run("stats", *ONE_ROBOT, "--output", str(target))
        assert code == EXIT_OK
        assert "Reachable states: 64" in text
        assert json.loads(target.read_text(encoding="utf-8")) == {
            'states': 64, 'transitions': 96, 'diameter': 0, 'complete': True,
        }

    def test_partial_stats(self):
        code, text = _run("stats", *ONE_ROBOT, "--budget", "10")
        assert code == EXIT_LIMIT
        assert "partial" in text

    def test_estimate(self):
        code, text = _run("estimate", "--config", str(CONFIG_DIR / "flocking_voter.json"),
                          "--runs", "3", "--max-ticks", "50")
        assert code == EXIT_OK
        assert "ESTIMATE consensus" in text

    def test_estimate_needs_proposition(self):
        code, text = _run("estimate", "--config", str(CONFIG_DIR / "foraging_scel.json"))
        assert code == EXIT_USAGE
        assert "needs a proposition" in text

    def test_step_then_quit(self, counter_file):
        code, text = _run("step", "--ispl", counter_file, inp="0\nq\n")
        assert code == EXIT_OK
        assert "Counter.n=1" in text, "Choosing index 0 (inc) advances the counter"

    def test_step_rejects_bad_index(self, counter_file):
        code, text = _run("step", "--ispl", counter_file, inp="9\n")
        assert code == EXIT_OK
        assert "[!] Expected an index" in text


class TestUsage:
    """Argument and config errors exit with status 2."""

    def test_unknown_subcommand(self):
        assert _run("fly")[0] == EXIT_USAGE

    def test_unknown_config_key(self):
        code, text = _run("sim", "--set", "scenario.wings=2")
        assert code == EXIT_USAGE
        assert "Config error" in text

    def test_malformed_override(self):
        assert _run("sim", "--set", "scenario.agents")[0] == EXIT_USAGE

    def test_bad_value(self):
        assert _run("sim", "--set", "scenario.arena.width=0")[0] == EXIT_USAGE

    def test_missing_config_file(self, tmp_path):
        assert _run("sim", "--config", str(tmp_path / "nope.json"))[0] == EXIT_USAGE

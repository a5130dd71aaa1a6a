"""Command line behaviour: exit codes, formats, determinism, goldens."""

import json
import subprocess
import sys
from pathlib import Path

from jetalg import (
    BUILTIN_TEXTS,
    EXPECTED_VERDICTS,
    main,
    parse_session,
    render_report,
    render_reports,
    run_check,
    run_session,
)

GOLDEN = Path(__file__).parent / "golden"


class TestRunCheck:
    def test_string_command(self):
        session = parse_session(BUILTIN_TEXTS["kdv_a2"], "kdv_a2")
        report = run_check(session, "verify-q2 A2")
        assert report.passed
        assert report.check == "verify-q2 A2"

    def test_expected_verdicts_for_all_builtins(self):
        for name, text in BUILTIN_TEXTS.items():
            session = parse_session(text, name)
            verdicts = {report.check: report.verdict for report in run_session(session)}
            assert verdicts == EXPECTED_VERDICTS[name]

    def test_failure_report_carries_nonzero_residual(self):
        session = parse_session(
            "base x; even w:1; odd b:1; op S : b -> w = D[x] + 1;"
            " check check-hamiltonian S;"
        )
        report = run_session(session)[0]
        assert not report.passed
        assert ("skew-adjointness", "2") in report.residuals


class TestRendering:
    def test_text_format_contains_verdict_and_residual(self):
        session = parse_session(BUILTIN_TEXTS["kdv_a2"], "kdv_a2")
        report = run_check(session, "verify-q2 A2")
        text = render_report(report, "text").decode()
        assert "PASS" in text
        assert "residual: 0" in text

    def test_json_fail_rendering(self):
        session = parse_session(BUILTIN_TEXTS["skew_non_hamiltonian"])
        report = run_session(session)[0]
        payload = json.loads(render_report(report, "json"))
        assert payload["verdict"] == "fail"
        assert any(entry["value"] != "0" for entry in payload["residuals"])
        assert set(payload) == {
            "check",
            "verdict",
            "engine_version",
            "inputs",
            "residuals",
            "details",
        }

    def test_json_deterministic_across_runs(self):
        session_a = parse_session(BUILTIN_TEXTS["kdv_a2"], "kdv_a2")
        session_b = parse_session(BUILTIN_TEXTS["kdv_a2"], "kdv_a2")
        bytes_a = render_reports(run_session(session_a), "json")
        bytes_b = render_reports(run_session(session_b), "json")
        assert bytes_a == bytes_b

    def test_golden_reports(self):
        for name, text in BUILTIN_TEXTS.items():
            session = parse_session(text, name)
            data = render_reports(run_session(session), "json") + b"\n"
            assert data == (GOLDEN / f"{name}.json").read_bytes(), name


class TestMainExitCodes:
    def test_pass_file(self, tmp_path, capsys):
        path = tmp_path / "ok.jets"
        path.write_text(BUILTIN_TEXTS["kdv_a2"])
        assert main(["run", str(path)]) == 0
        assert "PASS" in capsys.readouterr().out

    def test_fail_file(self, tmp_path, capsys):
        path = tmp_path / "bad.jets"
        path.write_text(BUILTIN_TEXTS["skew_non_hamiltonian"])
        assert main(["run", str(path)]) == 1
        assert "FAIL" in capsys.readouterr().out

    def test_parse_error(self, tmp_path, capsys):
        path = tmp_path / "broken.jets"
        path.write_text("base x; even w:1; op A : b -> w = w;")
        assert main(["run", str(path)]) == 2
        assert "error" in capsys.readouterr().err

    def test_missing_file(self, capsys):
        assert main(["run", "/nonexistent/f.jets"]) == 2
        capsys.readouterr()

    def test_check_filter(self, tmp_path, capsys):
        path = tmp_path / "ok.jets"
        path.write_text(BUILTIN_TEXTS["kdv_a2"])
        assert main(["run", str(path), "--check", "verify-q2 A2"]) == 0
        out = capsys.readouterr().out
        assert "verify-q2 A2" in out and "closure" not in out
        assert main(["run", str(path), "--check", "nope"]) == 2
        capsys.readouterr()

    def test_json_format(self, tmp_path, capsys):
        path = tmp_path / "ok.jets"
        path.write_text(BUILTIN_TEXTS["toda_heavenly_x"])
        assert main(["run", str(path), "--format", "json"]) == 0
        payload = json.loads(capsys.readouterr().out)
        assert payload["reports"][0]["details"]["certified_sign"] == "-"

    def test_example_and_list(self, capsys):
        assert main(["list"]) == 0
        names = capsys.readouterr().out.split()
        assert "kdv_a2" in names and "so3_point" in names
        assert main(["example", "kdv_a2"]) == 0
        capsys.readouterr()
        assert main(["example", "skew_non_hamiltonian"]) == 1
        capsys.readouterr()
        assert main(["example", "unknown"]) == 2
        capsys.readouterr()

    def test_usage_error(self, capsys):
        assert main([]) == 2
        capsys.readouterr()

    def test_runtime_engine_error(self, tmp_path, capsys):
        path = tmp_path / "m.jets"
        path.write_text(
            "base x; even v:2; even w:1; odd b:1;"
            " op M : v -> w = [D[x], 1]; check bivector M;"
        )
        assert main(["run", str(path)]) == 2
        assert "square" in capsys.readouterr().err


class TestSubprocess:
    def test_module_invocation(self):
        result = subprocess.run(
            [sys.executable, "-m", "jetalg", "example", "tangent_algebroid"],
            capture_output=True,
            text=True,
        )
        assert result.returncode == 0
        assert "PASS" in result.stdout

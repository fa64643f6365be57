import json
import subprocess
import sys

import pytest

from maxsing.cli import EXIT_AUDIT, EXIT_BUDGET, EXIT_OK, EXIT_USAGE, main


def gen(tmp_path, *extra, name="t.json"):
    out = tmp_path / name
    code = main(["gen", "--out", str(out), *extra])
    return code, out


class TestGen:
    def test_powerlaw_roundtrip(self, tmp_path):
        code, out = gen(tmp_path, "--family", "grassmann", "--n", "4", "--k", "2",
                        "--phi", "pow", "1/2", "--steps", "6", "--seed", "7")
        assert code == EXIT_OK
        doc = json.loads(out.read_text())
        assert len(doc["entries"]) == 6
        assert main(["verify", str(out)]) == EXIT_OK

    def test_log3x_budget_exit(self, tmp_path):
        code, out = gen(tmp_path, "--family", "quadric", "--phi", "log3x",
                        "--steps", "12", "--seed", "7")
        assert code == EXIT_BUDGET
        doc = json.loads(out.read_text())
        assert doc["partial"] is True
        assert len(doc["entries"]) == 4
        # the partial trace still audits clean
        assert main(["verify", str(out)]) == EXIT_OK

    def test_bad_exponent_rejected(self, tmp_path):
        code, _ = gen(tmp_path, "--family", "grassmann", "--n", "3", "--k", "2",
                      "--phi", "pow", "3/2", "--steps", "5")
        assert code == EXIT_USAGE

    def test_bad_family_params_rejected(self, tmp_path):
        code, _ = gen(tmp_path, "--family", "prodforms", "--n", "1", "--k", "2",
                      "--phi", "log3x", "--steps", "5")
        assert code == EXIT_USAGE

    def test_too_few_steps_rejected(self, tmp_path):
        code, _ = gen(tmp_path, "--family", "quadric", "--phi", "log3x", "--steps", "1")
        assert code == EXIT_USAGE

    def test_byte_identical_reruns(self, tmp_path):
        _, a = gen(tmp_path, "--family", "prodforms", "--n", "2", "--k", "3",
                   "--phi", "pow", "1/2", "--steps", "7", "--seed", "11", name="a.json")
        _, b = gen(tmp_path, "--family", "prodforms", "--n", "2", "--k", "3",
                   "--phi", "pow", "1/2", "--steps", "7", "--seed", "11", name="b.json")
        assert a.read_bytes() == b.read_bytes()

    def test_seed_changes_are_still_valid(self, tmp_path):
        for seed in ("0", "1"):
            code, out = gen(tmp_path, "--family", "quadric", "--phi", "pow", "1/2",
                            "--steps", "6", "--seed", seed, name=f"s{seed}.json")
            assert code == EXIT_OK
            assert main(["verify", str(out)]) == EXIT_OK

    def test_first_step_budget_failure_still_audits(self, tmp_path):
        # a zero search height kills the very first line step; the
        # one-point partial trace must still verify cleanly
        code, out = gen(tmp_path, "--family", "grassmann", "--n", "4", "--k", "2",
                        "--phi", "log3x", "--steps", "5", "--max-height", "0")
        assert code == EXIT_BUDGET
        doc = json.loads(out.read_text())
        assert doc["partial"] is True and len(doc["entries"]) == 1
        assert main(["verify", str(out)]) == EXIT_OK

    def test_seeded_quadric_survives_zero_height_briefly(self, tmp_path):
        # witness seeds are always available to the isotropic search, so
        # the split form makes progress even with no enumeration budget
        code, out = gen(tmp_path, "--family", "quadric", "--phi", "log3x",
                        "--steps", "5", "--max-height", "0")
        assert code == EXIT_BUDGET
        doc = json.loads(out.read_text())
        assert doc["partial"] is True and len(doc["entries"]) == 3
        assert main(["verify", str(out)]) == EXIT_OK


class TestVerify:
    def test_tampered_trace_fails(self, tmp_path):
        _, out = gen(tmp_path, "--family", "quadric", "--phi", "pow", "1/2",
                     "--steps", "6", "--seed", "2")
        doc = json.loads(out.read_text())
        doc["entries"][2]["x"], doc["entries"][3]["x"] = doc["entries"][3]["x"], doc["entries"][2]["x"]
        bad = tmp_path / "bad.json"
        bad.write_text(json.dumps(doc))
        assert main(["verify", str(bad)]) == EXIT_AUDIT

    def test_malformed_json_is_usage_error(self, tmp_path):
        p = tmp_path / "garbage.json"
        p.write_text("{not json")
        assert main(["verify", str(p)]) == EXIT_USAGE

    def test_audit_written_to_file(self, tmp_path):
        _, out = gen(tmp_path, "--family", "quadric", "--phi", "pow", "1/2",
                     "--steps", "6")
        audit = tmp_path / "audit.json"
        assert main(["verify", str(out), "--out", str(audit)]) == EXIT_OK
        doc = json.loads(audit.read_text())
        assert doc["all_pass"] is True
        assert "conditions" in doc and "spanning" in doc

    def test_bruteforce_section(self, tmp_path):
        _, out = gen(tmp_path, "--family", "quadric", "--phi", "log3x",
                     "--steps", "12")
        audit = tmp_path / "audit.json"
        assert main(["verify", str(out), "--bruteforce-xmax", "6",
                     "--out", str(audit)]) == EXIT_OK
        doc = json.loads(audit.read_text())
        assert doc["bruteforce"]["all_dominated"] is True
        assert len(doc["bruteforce"]["rows"]) > 0


class TestExponent:
    def test_table_and_json(self, tmp_path, capsys):
        _, out = gen(tmp_path, "--family", "quadric", "--phi", "pow", "1/2",
                     "--steps", "8")
        assert main(["exponent", str(out)]) == EXIT_OK
        table = capsys.readouterr().out
        assert "lambda_lb" in table
        assert main(["exponent", str(out), "--json"]) == EXIT_OK
        rows = json.loads(capsys.readouterr().out)
        assert all({"index", "X", "D_hi", "lambda_lb"} <= set(r) for r in rows)

    def test_short_trace_rejected(self, tmp_path):
        _, out = gen(tmp_path, "--family", "quadric", "--phi", "log3x", "--steps", "2")
        assert main(["exponent", str(out)]) == EXIT_USAGE


class TestBruteforce:
    def test_table(self, tmp_path, capsys):
        _, out = gen(tmp_path, "--family", "quadric", "--phi", "log3x", "--steps", "12")
        assert main(["bruteforce", str(out), "--xmax", "4", "--json"]) == EXIT_OK
        rows = json.loads(capsys.readouterr().out)
        assert rows[-1]["X"] == 4

    def test_short_trace_rejected(self, tmp_path):
        _, out = gen(tmp_path, "--family", "quadric", "--phi", "log3x", "--steps", "2")
        assert main(["bruteforce", str(out), "--xmax", "3"]) == EXIT_USAGE


class TestUserMap:
    def test_klinear_file_roundtrip(self, tmp_path):
        from maxsing.multilinear import prodforms_map, save_map

        mp = tmp_path / "map.json"
        save_map(prodforms_map(2, 2), str(mp))
        out = tmp_path / "t.json"
        code = main(["gen", "--family", "klinear", "--klinear-file", str(mp),
                     "--phi", "pow", "1/2", "--steps", "6", "--out", str(out)])
        assert code == EXIT_OK
        assert main(["verify", str(out)]) == EXIT_OK
        doc = json.loads(out.read_text())
        assert doc["family"]["kind"] == "klinear"
        assert doc["family"]["D"] == 3

    def test_klinear_requires_file(self, tmp_path):
        code, _ = gen(tmp_path, "--family", "klinear", "--phi", "log3x", "--steps", "4")
        assert code == EXIT_USAGE

    def test_quadric_file(self, tmp_path):
        from maxsing.quadric import save_form, split4

        form, wit = split4()
        qf = tmp_path / "form.json"
        save_form(form, wit, str(qf))
        code, out = gen(tmp_path, "--family", "quadric", "--quadric-file", str(qf),
                        "--phi", "pow", "1/2", "--steps", "5")
        assert code == EXIT_OK
        assert main(["verify", str(out)]) == EXIT_OK


class TestEntryPoint:
    def test_console_script(self, tmp_path):
        out = tmp_path / "t.json"
        proc = subprocess.run(
            [sys.executable, "-m", "maxsing.cli", "gen", "--family", "quadric",
             "--phi", "pow", "1/2", "--steps", "5", "--out", str(out)],
            capture_output=True, text=True,
        )
        assert proc.returncode == EXIT_OK, proc.stderr
        assert out.exists()

    def test_usage_error(self):
        assert main(["gen", "--family", "quadric"]) == EXIT_USAGE

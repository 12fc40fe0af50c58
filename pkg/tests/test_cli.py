"""CLI dispatch: exit codes, output formats, and library equivalence."""

import datetime as dt
import shutil
from pathlib import Path

import pytest

from conftest import FIXTURES, populate_fixture_store
from uclog.cli import main
from uclog.config import load_config
from uclog.reports import QueryEngine, export_tsv, run_report
from uclog.store import IncidentStore
from uclog.timeutil import UTC

FIXED_NOW = "2004-03-10T12:00:00Z"


@pytest.fixture
def env(tmp_path):
    """Config file + populated on-disk store + local flow source."""
    corpus_dir = tmp_path / "logs"
    corpus_dir.mkdir()
    config_path = tmp_path / "uclog.ini"
    config_path.write_text(
        "[store]\n"
        "path = store.db\n"
        "[ingest]\n"
        "drop_dir = drop\n"
        "[correlator]\n"
        "cache_dir = cache\n"
        "[auth]\n"
        "admin_user = root\n"
        "admin_password = rootpw\n"
        "[source.locallogs]\n"
        "display_name = Local flow logs\n"
        "transport = local\n"
        f"path_pattern = {corpus_dir}/{{date}}.flows\n"
        "command_template = grep -hF {ip} {path} || true; : {start} {end}\n",
        encoding="utf-8")
    store = IncidentStore(str(tmp_path / "store.db"))
    populate_fixture_store(store)
    store.close()
    return config_path


def run(config_path, *argv, capsys=None):
    code = main(["--config", str(config_path), *argv])
    out, err = capsys.readouterr() if capsys else ("", "")
    return code, out, err


class TestReportCommand:
    def test_tsv_stdout_matches_library(self, env, capsys):
        code, out, _ = run(env, "--now", FIXED_NOW, "report",
                           "top_compromised", "--tsv", "-", capsys=capsys)
        assert code == 0
        store = IncidentStore(load_config(str(env)).store_path)
        table, _ = run_report(QueryEngine(store), "top_compromised", {},
                              now=dt.datetime(2004, 3, 10, 12, tzinfo=UTC))
        assert out == export_tsv(table)

    def test_unknown_report_exits_2_with_catalog(self, env, capsys):
        code, _, err = run(env, "report", "nosuch", capsys=capsys)
        assert code == 2
        assert "available reports" in err
        assert "top_compromised" in err

    def test_missing_required_param_exits_2(self, env, capsys):
        code, _, err = run(env, "report", "host_history", capsys=capsys)
        assert code == 2
        assert "host" in err

    def test_params_and_human_table(self, env, capsys):
        code, out, _ = run(env, "report", "host_history", "--param",
                           "host=w.x.y.z", capsys=capsys)
        assert code == 0
        assert "w.x.y.z" in out
        assert out.splitlines()[0].startswith("incident_id")

    def test_plot_spec_file(self, env, tmp_path, capsys):
        plot_path = tmp_path / "out.plotspec"
        code, _, _ = run(env, "--now", FIXED_NOW, "report", "frequent_types",
                         "--plot", str(plot_path), capsys=capsys)
        assert code == 0
        first = plot_path.read_text().splitlines()[0]
        assert first.startswith("#pie ")

    def test_tsv_file_output(self, env, tmp_path, capsys):
        out_path = tmp_path / "out.tsv"
        code, _, _ = run(env, "--now", FIXED_NOW, "report", "pct_by_dow",
                         "--tsv", str(out_path), capsys=capsys)
        assert code == 0
        assert out_path.read_text().startswith("day\tpct\n")


class TestIngestCommand:
    def test_mixed_drop_directory(self, env, tmp_path, capsys):
        drop = tmp_path / "drop"
        (drop / "incoming").mkdir(parents=True)
        valid = ("From: a@b\nSubject: s\n\n"
                 "HOST: cli{i}.x.y.z\nTYPE: scan\nTIME: 2004-03-01T00:00:00Z\n")
        for i in range(3):
            (drop / "incoming" / f"ok{i}.msg").write_text(
                valid.replace("{i}", str(i)))
        for src in sorted((FIXTURES / "alerts_malformed").iterdir())[:2]:
            shutil.copy(src, drop / "incoming" / src.name)
        code, out, _ = run(env, "ingest", "--dir", str(drop), "--once",
                           capsys=capsys)
        assert code == 0
        assert "accepted=3 rejected=2" in out

    def test_missing_directory_exits_1(self, env, tmp_path, capsys):
        code, _, err = run(env, "ingest", "--dir", str(tmp_path / "missing"),
                           capsys=capsys)
        assert code == 1
        assert "error:" in err


class TestFlowsCommand:
    def _write_corpus(self, env):
        config = load_config(str(env))
        pattern = config.sources[0].path_pattern
        day_file = Path(pattern.replace("{date}", "2004-03-01"))
        lines = [
            "1078102800 1.5 tcp 198.51.100.9 40000 10.0.0.20 22 10 1200 S",
            "1078103100 1.5 tcp 198.51.100.9 40001 10.0.0.21 22 10 1200 S",
            "1078103400 2.0 tcp 10.0.0.9 40002 10.0.0.22 80 5 600 S",
        ]
        day_file.write_text("\n".join(lines) + "\n")
        return day_file, lines

    def test_local_search_then_cache_survives_corpus_deletion(self, env, capsys):
        day_file, lines = self._write_corpus(env)
        args = ("flows", "--source", "locallogs", "--ip", "198.51.100.9",
                "--from", "2004-03-01T00:00:00Z", "--to", "2004-03-02T00:00:00Z")
        code, out, err = run(env, *args, capsys=capsys)
        assert code == 0
        assert out.splitlines() == lines[:2]
        assert "from_cache=false" in err
        day_file.unlink()  # raw data ages out; cache must still serve
        code, out, err = run(env, *args, capsys=capsys)
        assert code == 0
        assert out.splitlines() == lines[:2]
        assert "from_cache=true" in err

    def test_unknown_source_exits_1(self, env, capsys):
        code, _, err = run(env, "flows", "--source", "nope", "--ip", "1.2.3.4",
                           "--from", "2004-03-01T00:00:00Z",
                           "--to", "2004-03-02T00:00:00Z", capsys=capsys)
        assert code == 1
        assert "error:" in err

    def test_hostile_ip_exits_1_without_running(self, env, capsys):
        code, _, err = run(env, "flows", "--source", "locallogs",
                           "--ip", "1.2.3.4; rm -rf /",
                           "--from", "2004-03-01T00:00:00Z",
                           "--to", "2004-03-02T00:00:00Z", capsys=capsys)
        assert code == 1
        assert "error:" in err


class TestAdminCommands:
    def test_init_creates_store_and_admin(self, env, capsys):
        code, out, _ = run(env, "init", capsys=capsys)
        assert code == 0
        store = IncidentStore(load_config(str(env)).store_path)
        assert store.get_user("root").role == "admin"

    def test_user_add_and_list(self, env, capsys):
        code, _, _ = run(env, "user", "add", "dana", "--role", "admin",
                         "--password", "pw", capsys=capsys)
        assert code == 0
        code, out, _ = run(env, "user", "list", capsys=capsys)
        assert code == 0
        assert "dana\tadmin" in out

    def test_audit_tail(self, env, capsys):
        code, out, _ = run(env, "audit", "tail", "-n", "5", capsys=capsys)
        assert code == 0
        lines = [l for l in out.splitlines() if l]
        assert len(lines) == 5
        assert all(len(l.split("\t")) == 5 for l in lines)

    def test_schema_dump(self, env, capsys):
        code, out, _ = run(env, "schema", "dump", capsys=capsys)
        assert code == 0
        for table in ("hosts", "emails", "types", "incidents"):
            assert f"CREATE TABLE {table}" in out

    def test_usage_error_exits_2(self, env, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["--config", str(env), "report"])  # missing name
        assert exc.value.code == 2

    def test_missing_config_file_exits_1(self, tmp_path, capsys):
        code = main(["--config", str(tmp_path / "absent.ini"), "schema", "dump"])
        assert code == 1

import json

import pytest

from icecast.cli import EXIT_DATA, EXIT_MODEL, EXIT_OK, EXIT_USAGE, main
from icecast.grid import dump_grid, make_mesh


GOOD_OBS = "#obs v1\n2012-01-01T00:00:00Z,1,0.5\n2012-01-02T00:00:00Z,1,0.6\n"


@pytest.fixture()
def store(tmp_path):
    return str(tmp_path / "store")


def write(tmp_path, name, text):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


def run(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def seed_fitted_model(tmp_path, capsys, store, point=1, days=60, level=0.5):
    obs = str(tmp_path / f"p{point}.obs")
    code, _, _ = run(
        capsys, "synth", "--seed", str(point), "--days", str(days),
        "--point", str(point), "--start", "2012-01-01", "--level", str(level),
        "--out", obs,
    )
    assert code == EXIT_OK
    assert run(capsys, "ingest", obs, "--store", store)[0] == EXIT_OK
    model = str(tmp_path / f"p{point}.model")
    to_day = "2012-02-29" if days == 60 else None
    assert to_day is not None
    code, _, _ = run(
        capsys, "fit", "--store", store, "--point", str(point),
        "--from", "2012-01-01", "--to", to_day, "--out", model,
    )
    assert code == EXIT_OK
    return model


class TestUsageErrors:
    def test_unknown_command(self, capsys):
        code, _, err = run(capsys, "frobnicate")
        assert code == EXIT_USAGE

    def test_missing_required_flag(self, capsys, store):
        code, _, err = run(capsys, "query", "--store", store, "--point", "1")
        assert code == EXIT_USAGE

    def test_bad_date(self, capsys, store):
        code, _, err = run(
            capsys, "query", "--store", store, "--point", "1",
            "--from", "01/01/2012", "--to", "2012-01-02",
        )
        assert code == EXIT_USAGE
        assert "usage error" in err

    def test_reversed_range(self, capsys, store):
        code, _, _ = run(
            capsys, "query", "--store", store, "--point", "1",
            "--from", "2012-01-05", "--to", "2012-01-02",
        )
        assert code == EXIT_USAGE

    def test_bad_horizon(self, capsys, tmp_path, store):
        model = seed_fitted_model(tmp_path, capsys, store)
        code, _, _ = run(capsys, "forecast", "--model", model, "--horizon", "0")
        assert code == EXIT_USAGE

    def test_synth_bad_days(self, capsys, tmp_path):
        code, _, _ = run(
            capsys, "synth", "--seed", "1", "--days", "0",
            "--out", str(tmp_path / "x.obs"),
        )
        assert code == EXIT_USAGE


class TestIngest:
    def test_counts(self, capsys, tmp_path, store):
        path = write(tmp_path, "good.obs", GOOD_OBS)
        code, out, _ = run(capsys, "ingest", path, "--store", store)
        assert code == EXIT_OK
        assert out.strip() == "appended 2 skipped 0"

    def test_reingest_skips_everything(self, capsys, tmp_path, store):
        path = write(tmp_path, "good.obs", GOOD_OBS)
        run(capsys, "ingest", path, "--store", store)
        code, out, _ = run(capsys, "ingest", path, "--store", store)
        assert code == EXIT_OK
        assert out.strip() == "appended 0 skipped 2"

    def test_bad_line_is_all_or_nothing(self, capsys, tmp_path, store):
        bad = GOOD_OBS + "2012-01-03T00:00:00Z,1,not-a-number\n"
        path = write(tmp_path, "bad.obs", bad)
        code, _, err = run(capsys, "ingest", path, "--store", store)
        assert code == EXIT_DATA
        assert "data error" in err
        code, out, _ = run(
            capsys, "query", "--store", store, "--point", "1",
            "--from", "2012-01-01", "--to", "2012-01-03",
        )
        assert code == EXIT_OK
        assert out == "#obs v1\n"

    def test_conflicting_revision_rejected(self, capsys, tmp_path, store):
        run(capsys, "ingest", write(tmp_path, "a.obs", GOOD_OBS), "--store", store)
        conflict = "#obs v1\n2012-01-01T00:00:00Z,1,0.9\n"
        code, _, err = run(
            capsys, "ingest", write(tmp_path, "b.obs", conflict), "--store", store
        )
        assert code == EXIT_DATA

    def test_missing_file(self, capsys, store):
        code, _, err = run(capsys, "ingest", "/nonexistent/file.obs", "--store", store)
        assert code == EXIT_DATA

    def test_non_midnight_needs_coercion(self, capsys, tmp_path, store):
        noon = "#obs v1\n2012-01-01T12:00:00Z,1,0.5\n"
        path = write(tmp_path, "noon.obs", noon)
        code, _, _ = run(capsys, "ingest", path, "--store", store)
        assert code == EXIT_DATA
        code, out, _ = run(capsys, "ingest", path, "--store", store, "--coerce-midnight")
        assert code == EXIT_OK
        assert out.strip() == "appended 1 skipped 0"


class TestQueryAndPlot:
    def test_query_round_trips_bytes(self, capsys, tmp_path, store):
        path = write(tmp_path, "good.obs", GOOD_OBS)
        run(capsys, "ingest", path, "--store", store)
        code, out, _ = run(
            capsys, "query", "--store", store, "--point", "1",
            "--from", "2012-01-01", "--to", "2012-01-02",
        )
        assert code == EXIT_OK
        assert out == GOOD_OBS

    def test_query_json(self, capsys, tmp_path, store):
        run(capsys, "ingest", write(tmp_path, "good.obs", GOOD_OBS), "--store", store)
        code, out, _ = run(
            capsys, "query", "--store", store, "--point", "1",
            "--from", "2012-01-01", "--to", "2012-01-02", "--format", "json",
        )
        assert code == EXIT_OK
        rows = json.loads(out)
        assert rows[0] == {
            "timestamp": "2012-01-01T00:00:00Z",
            "point_id": 1,
            "concentration": 0.5,
        }

    def test_plot_svg(self, capsys, tmp_path, store):
        run(capsys, "ingest", write(tmp_path, "good.obs", GOOD_OBS), "--store", store)
        out_path = tmp_path / "series.svg"
        code, _, _ = run(
            capsys, "plot", "--store", store, "--point", "1",
            "--from", "2012-01-01", "--to", "2012-01-02", "--out", str(out_path),
        )
        assert code == EXIT_OK
        assert out_path.read_text().startswith("<svg ")

    def test_plot_ascii(self, capsys, tmp_path, store):
        run(capsys, "ingest", write(tmp_path, "good.obs", GOOD_OBS), "--store", store)
        code, out, _ = run(
            capsys, "plot", "--store", store, "--point", "1",
            "--from", "2012-01-01", "--to", "2012-01-02", "--ascii",
        )
        assert code == EXIT_OK
        assert "*" in out

    def test_plot_empty_range_is_data_error(self, capsys, tmp_path, store):
        run(capsys, "ingest", write(tmp_path, "good.obs", GOOD_OBS), "--store", store)
        code, _, err = run(
            capsys, "plot", "--store", store, "--point", "2",
            "--from", "2012-01-01", "--to", "2012-01-02", "--ascii",
        )
        assert code == EXIT_DATA


class TestFetch:
    def test_fetch_appends(self, capsys, store, series_endpoint):
        code, out, _ = run(
            capsys, "fetch", "--store", store, "--point", "3",
            "--from", "2012-01-01", "--to", "2012-01-05",
            "--endpoint", series_endpoint,
        )
        assert code == EXIT_OK
        assert out.strip() == "appended 5 skipped 0"

    def test_fetch_endpoint_from_env(self, capsys, store, series_endpoint, monkeypatch):
        monkeypatch.setenv("ICECAST_ENDPOINT", series_endpoint)
        code, out, _ = run(
            capsys, "fetch", "--store", store, "--point", "3",
            "--from", "2012-01-01", "--to", "2012-01-03",
        )
        assert code == EXIT_OK
        assert out.strip() == "appended 3 skipped 0"

    def test_fetch_without_endpoint(self, capsys, store, monkeypatch):
        monkeypatch.delenv("ICECAST_ENDPOINT", raising=False)
        code, _, _ = run(
            capsys, "fetch", "--store", store, "--point", "3",
            "--from", "2012-01-01", "--to", "2012-01-03",
        )
        assert code == EXIT_USAGE

    def test_fetch_http_failure(self, capsys, store, series_endpoint):
        code, _, err = run(
            capsys, "fetch", "--store", store, "--point", "999",
            "--from", "2012-01-01", "--to", "2012-01-03",
            "--endpoint", series_endpoint,
        )
        assert code == EXIT_DATA


class TestModelPipeline:
    def test_fit_insufficient_data_is_model_error(self, capsys, tmp_path, store):
        few = "#obs v1\n" + "".join(
            f"2012-01-0{d}T00:00:00Z,1,0.5\n" for d in range(1, 6)
        )
        run(capsys, "ingest", write(tmp_path, "few.obs", few), "--store", store)
        code, _, err = run(
            capsys, "fit", "--store", store, "--point", "1",
            "--from", "2012-01-01", "--to", "2012-01-05",
            "--out", str(tmp_path / "m.model"),
        )
        assert code == EXIT_MODEL
        assert "model error" in err

    def test_fit_writes_model_file(self, capsys, tmp_path, store):
        model = seed_fitted_model(tmp_path, capsys, store)
        with open(model) as fh:
            assert fh.readline() == "#icemodel v1\n"

    def test_forecast_line_count(self, capsys, tmp_path, store):
        model = seed_fitted_model(tmp_path, capsys, store)
        code, out, _ = run(capsys, "forecast", "--model", model, "--horizon", "30")
        assert code == EXIT_OK
        lines = out.splitlines()
        assert lines[0] == "#forecast v1"
        assert len(lines) == 31
        first = lines[1].split(",")
        assert first[0] == "1"
        assert 0.0 <= float(first[3]) <= 1.0

    def test_forecast_on_constant_series_repeats_the_constant(self, capsys, tmp_path, store):
        obs = str(tmp_path / "flat.obs")
        run(
            capsys, "synth", "--seed", "1", "--days", "60", "--level", "0.42",
            "--q", "0", "--r", "0", "--out", obs,
        )
        run(capsys, "ingest", obs, "--store", store)
        model = str(tmp_path / "flat.model")
        code, _, _ = run(
            capsys, "fit", "--store", store, "--point", "1",
            "--from", "2012-01-01", "--to", "2012-02-29", "--out", model,
        )
        assert code == EXIT_OK
        code, out, _ = run(capsys, "forecast", "--model", model, "--horizon", "30")
        assert code == EXIT_OK
        means = [float(line.split(",")[1]) for line in out.splitlines()[1:]]
        assert len(means) == 30
        assert all(abs(m - 0.42) <= 1e-6 for m in means)

    def test_forecast_missing_model_file(self, capsys, tmp_path):
        code, _, _ = run(
            capsys, "forecast", "--model", str(tmp_path / "no.model"), "--horizon", "3"
        )
        assert code == EXIT_DATA

    def test_risk_and_route(self, capsys, tmp_path, store):
        m1 = seed_fitted_model(tmp_path, capsys, store, point=1)
        m2 = seed_fitted_model(tmp_path, capsys, store, point=2)
        grid_path = write(tmp_path, "pair.grid", dump_grid(make_mesh(2, 1)))
        field_path = str(tmp_path / "field.risk")
        code, _, _ = run(
            capsys, "risk", "--grid", grid_path, "--model", m1, "--model", m2,
            "--horizon", "5", "--out", field_path,
        )
        assert code == EXIT_OK
        with open(field_path) as fh:
            assert fh.readline().startswith("#riskfield v1 ")

        code, out, _ = run(
            capsys, "route", "--grid", grid_path, "--field", field_path,
            "--start", "1", "--goal", "2",
        )
        assert code == EXIT_OK
        assert out.startswith("cells=1,2; survival=")

    def test_route_detours_around_heavy_ice(self, capsys, tmp_path, store):
        # 2x2 mesh, cell 2 trained near full ice cover: best 1 -> 4 goes via 3
        levels = {1: 0.2, 2: 0.95, 3: 0.2, 4: 0.2}
        models = [
            seed_fitted_model(tmp_path, capsys, store, point=p, level=lv)
            for p, lv in levels.items()
        ]
        grid_path = write(tmp_path, "square.grid", dump_grid(make_mesh(2, 2)))
        field_path = str(tmp_path / "field.risk")
        argv = ["risk", "--grid", grid_path, "--horizon", "5", "--out", field_path]
        for m in models:
            argv += ["--model", m]
        assert run(capsys, *argv)[0] == EXIT_OK
        code, out, _ = run(
            capsys, "route", "--grid", grid_path, "--field", field_path,
            "--start", "1", "--goal", "4",
        )
        assert code == EXIT_OK
        assert out.startswith("cells=1,3,4; ")

    def test_risk_missing_point_model(self, capsys, tmp_path, store):
        m1 = seed_fitted_model(tmp_path, capsys, store, point=1)
        grid_path = write(tmp_path, "pair.grid", dump_grid(make_mesh(2, 1)))
        code, _, _ = run(
            capsys, "risk", "--grid", grid_path, "--model", m1, "--horizon", "5"
        )
        assert code == EXIT_MODEL

    def test_route_unreachable(self, capsys, tmp_path, store):
        m1 = seed_fitted_model(tmp_path, capsys, store, point=1)
        m2 = seed_fitted_model(tmp_path, capsys, store, point=2)
        # two cells that are not adjacent
        from icecast.grid import GridModel, GridPoint

        grid_path = write(
            tmp_path, "apart.grid",
            dump_grid(GridModel([GridPoint(1, 0, 0), GridPoint(2, 5, 5)])),
        )
        field_path = str(tmp_path / "field.risk")
        run(
            capsys, "risk", "--grid", grid_path, "--model", m1, "--model", m2,
            "--horizon", "5", "--out", field_path,
        )
        code, _, _ = run(
            capsys, "route", "--grid", grid_path, "--field", field_path,
            "--start", "1", "--goal", "2",
        )
        assert code == EXIT_DATA


class TestSynthAndVerify:
    def test_synth_deterministic(self, capsys, tmp_path):
        a, b = str(tmp_path / "a.obs"), str(tmp_path / "b.obs")
        for out in (a, b):
            code, _, _ = run(
                capsys, "synth", "--seed", "5", "--days", "30", "--out", out
            )
            assert code == EXIT_OK
        with open(a) as fa, open(b) as fb:
            assert fa.read() == fb.read()

    def test_synth_noiseless_is_constant(self, capsys, tmp_path):
        out_path = str(tmp_path / "flat.obs")
        code, _, _ = run(
            capsys, "synth", "--seed", "7", "--days", "20", "--level", "0.4",
            "--q", "0", "--r", "0", "--out", out_path,
        )
        assert code == EXIT_OK
        from icecast.ingest import parse_records

        with open(out_path) as fh:
            records = parse_records(fh.read())
        assert len(records) == 20
        assert all(rec.concentration == 0.4 for rec in records)

    def test_synth_values_in_range(self, capsys, tmp_path):
        out = str(tmp_path / "a.obs")
        run(
            capsys, "synth", "--seed", "5", "--days", "50", "--level", "0.99",
            "--q", "0.05", "--out", out,
        )
        from icecast.ingest import parse_records

        with open(out) as fh:
            for rec in parse_records(fh.read()):
                assert 0.0 <= rec.concentration <= 1.0

    def test_verify_clean(self, capsys, tmp_path, store):
        run(capsys, "ingest", write(tmp_path, "good.obs", GOOD_OBS), "--store", store)
        code, out, _ = run(capsys, "verify", "--store", store)
        assert code == EXIT_OK
        assert "failures: 0" in out

    def test_verify_reports_corruption(self, capsys, tmp_path, store):
        run(capsys, "ingest", write(tmp_path, "good.obs", GOOD_OBS), "--store", store)
        seg = tmp_path / "store" / "seg-000001.txt"
        seg.write_text(seg.read_text().replace("0.5", "0.7", 1))
        code, out, _ = run(capsys, "verify", "--store", store)
        assert code == EXIT_DATA
        assert "seg-000001.txt:2" in out

    def test_other_commands_refuse_corrupt_store(self, capsys, tmp_path, store):
        run(capsys, "ingest", write(tmp_path, "good.obs", GOOD_OBS), "--store", store)
        seg = tmp_path / "store" / "seg-000001.txt"
        seg.write_text(seg.read_text().replace("0.5", "0.7", 1))
        code, _, err = run(
            capsys, "query", "--store", store, "--point", "1",
            "--from", "2012-01-01", "--to", "2012-01-02",
        )
        assert code == EXIT_DATA
        assert "data error" in err

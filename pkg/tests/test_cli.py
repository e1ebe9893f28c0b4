import json
from pathlib import Path
from typing import List

import pytest

from src.cli import dispatch
from src.config import config
from tests.helpers.run_if import RunIf

SCHEMAS = Path(__file__).resolve().parents[1] / "schemas"


def run(tmp_path: Path, *argv: str) -> int:
    return dispatch(["--out-dir", str(tmp_path), *argv])


def read(tmp_path: Path, name: str) -> dict:
    return json.loads((tmp_path / f"{name}.json").read_text())


def write_config(tmp_path: Path, document: dict) -> str:
    path = tmp_path / "run.json"
    path.write_text(json.dumps(document))
    return str(path)


def test_exponents(tmp_path: Path, capsys: pytest.CaptureFixture) -> None:
    """The exponent table is printed and written.

    :param tmp_path: The output directory.
    :param capsys: Captured standard streams.
    """
    assert run(tmp_path, "exponents", "--dim", "11") == 0
    printed = json.loads(capsys.readouterr().out)
    assert abs(printed["p_JL"] - 6.9220245868) <= 1e-9
    assert read(tmp_path, "exponents") == printed


def test_exponents_with_a_regime(tmp_path: Path) -> None:
    """Giving p adds the regime and the singular amplitude.

    :param tmp_path: The output directory.
    """
    assert run(tmp_path, "exponents", "--dim", "3", "--p", "5") == 0
    out = read(tmp_path, "exponents")
    assert out["regime"] == "critical"
    assert abs(out["L"] - 0.5**0.5) <= 1e-15


@pytest.mark.parametrize(
    "argv",
    [
        ["exponents", "--dim", "0"],
        ["frobnicate"],
        ["shoot", "--dim", "3", "--p", "5"],
        ["--tol", "0.5", "exponents", "--dim", "3"],
        ["--critical-tol", "1.5", "exponents", "--dim", "3"],
        ["census", "--pairs", "3-5"],
        ["heteroclinic", "--dim", "3", "--p", "5"],
        ["intersections", "--dim", "3", "--p", "5", "--delaunay-min", "0.3"],
    ],
)
def test_invalid_input_exits_with_two(tmp_path: Path, argv: List[str]) -> None:
    """Validation failures exit with 2.

    :param tmp_path: The output directory.
    :param argv: The command line.
    """
    assert run(tmp_path, *argv) == 2


def test_errors_are_reported_as_json(tmp_path: Path, capsys: pytest.CaptureFixture) -> None:
    """Errors go to standard error as one JSON object.

    :param tmp_path: The output directory.
    :param capsys: Captured standard streams.
    """
    assert run(tmp_path, "exponents", "--dim", "0") == 2
    error = json.loads(capsys.readouterr().err.strip().splitlines()[-1])
    assert error["error"] == "DomainError"
    assert "dimension" in error["message"]


def test_shoot_writes_csv(tmp_path: Path) -> None:
    """Profiles come with a CSV of r, value and derivative.

    :param tmp_path: The output directory.
    """
    assert run(tmp_path, "shoot", "--dim", "3", "--p", "5", "--rmax", "10") == 0
    header = (tmp_path / "shoot.csv").read_text().splitlines()[0]
    assert header == "r,value,derivative"
    assert read(tmp_path, "shoot")["first_root"] is None


def test_outputs_are_deterministic(tmp_path: Path) -> None:
    """Identical commands produce byte-identical files.

    :param tmp_path: The output directory.
    """
    first, second = tmp_path / "a", tmp_path / "b"
    for out in (first, second):
        assert run(out, "--seed", "5", "doubling", "--random", "30", "--k", "0.5") == 0
        assert run(out, "shoot", "--dim", "3", "--p", "4", "--rmax", "5") == 0
    for name in ("doubling.json", "space.json", "shoot.json", "shoot.csv"):
        assert (first / name).read_bytes() == (second / name).read_bytes()


def test_out_dir_from_environment(tmp_path: Path, monkeypatch: pytest.MonkeyPatch) -> None:
    """Without --out-dir the environment variable picks the directory.

    :param tmp_path: The output directory.
    :param monkeypatch: Environment patching.
    """
    monkeypatch.setenv(config.cli.out_dir_env, str(tmp_path / "env"))
    assert dispatch(["exponents", "--dim", "3"]) == 0
    assert (tmp_path / "env" / "exponents.json").exists()


def test_tolerance_flags_do_not_leak(tmp_path: Path) -> None:
    """--tol and --critical-tol only hold for their own command.

    :param tmp_path: The output directory.
    """
    rel_tol, critical = config.radial_ode.rel_tol, config.exponents.critical_rel_tol
    assert run(tmp_path, "--tol", "1e-6", "--critical-tol", "1e-3", "exponents", "--dim", "3", "--p", "5.001") == 0
    assert read(tmp_path, "exponents")["regime"] == "critical"
    assert config.radial_ode.rel_tol == rel_tol
    assert config.exponents.critical_rel_tol == critical


def test_intersections(tmp_path: Path) -> None:
    """The census at p = p_S finds exactly two radii.

    :param tmp_path: The output directory.
    """
    assert run(tmp_path, "intersections", "--dim", "3", "--p", "5", "--rmax", "100") == 0
    out = read(tmp_path, "intersections")
    assert out["count"] == 2
    assert out["consistent"]
    assert abs(out["radii"][0] - (3.0 - 6.0**0.5)) <= 1e-6


def test_intersections_with_a_delaunay_profile(tmp_path: Path) -> None:
    """With --delaunay-min the first crossing is τ_λ.

    :param tmp_path: The output directory.
    """
    assert run(tmp_path, "intersections", "--dim", "3", "--p", "5", "--delaunay-min", "0.35", "--lambda", "1", "--rmax", "20") == 0
    out = read(tmp_path, "intersections")
    assert out["consistent"]
    assert out["count"] >= 1
    assert abs(out["radii"][0] - out["tau_lambda"]) <= 1e-8 * out["tau_lambda"]


def test_census(tmp_path: Path) -> None:
    """Rows come back sorted by (N, p).

    :param tmp_path: The output directory.
    """
    assert run(tmp_path, "census", "--pairs", "3:5,3:4", "--rmax", "50") == 0
    rows = read(tmp_path, "census")["rows"]
    assert [(row["N"], row["p"]) for row in rows] == [(3, 4.0), (3, 5.0)]
    assert (tmp_path / "census.csv").exists()


def test_delaunay(tmp_path: Path) -> None:
    """Two periods of a periodic orbit are tabulated.

    :param tmp_path: The output directory.
    """
    assert run(tmp_path, "delaunay", "--dim", "3", "--min-value", "0.35", "--periods", "2") == 0
    out = read(tmp_path, "delaunay")
    assert out["energy_drift"] <= 1e-8
    assert len((tmp_path / "delaunay.csv").read_text().splitlines()) == 1 + 2 * config.emden_fowler.samples_per_period + 1


def test_heteroclinic(tmp_path: Path) -> None:
    """The subcritical heteroclinic reports its limit and decay rate.

    :param tmp_path: The output directory.
    """
    assert run(tmp_path, "heteroclinic", "--dim", "3", "--p", "4") == 0
    out = read(tmp_path, "heteroclinic")
    assert abs(out["backward_limit"] - out["L"]) <= 1e-6
    assert abs(out["decay_rate"] - out["expected_decay_rate"]) <= 0.02 * out["expected_decay_rate"]


def test_supersolution_with_a_residual(tmp_path: Path) -> None:
    """--mesh-h adds the discrete residual on a mesh through the junction.

    :param tmp_path: The output directory.
    """
    assert run(tmp_path, "supersolution", "--dim", "3", "--p", "5", "--lambda", "1", "--mesh-h", "0.01") == 0
    out = read(tmp_path, "supersolution")
    assert abs(out["kink_jump"] - 0.70672) <= 1e-4
    assert out["junction_residual"] > 0.0
    assert out["min_weak_residual"] >= -1e-6


def test_evolve(tmp_path: Path) -> None:
    """A run config drives one evolution.

    :param tmp_path: The output directory.
    """
    path = write_config(
        tmp_path,
        {
            "R": 5.0,
            "mesh_nodes": 33,
            "initial": {"kind": "barrier_fraction", "lam": 1.0, "fraction": 0.5},
            "boundary": {"kind": "barrier", "lam": 1.0, "fraction": 0.5},
            "horizon": 0.1,
            "checkpoints": 3,
        },
    )
    assert run(tmp_path, "evolve", "--config", path) == 0
    out = read(tmp_path, "evolve")
    assert out["blowup_time"] is None
    assert out["checkpoint_times"] == [0.0, 0.05, 0.1]
    assert len((tmp_path / "evolve.csv").read_text().splitlines()) == 1 + 3 * 33


def test_evolve_rejects_unknown_keys(tmp_path: Path) -> None:
    """Unknown keys in a run config are validation errors.

    :param tmp_path: The output directory.
    """
    assert run(tmp_path, "evolve", "--config", write_config(tmp_path, {"R": 5.0, "mesh_size": 33})) == 2
    assert run(tmp_path, "evolve", "--config", str(tmp_path / "missing.json")) == 2


def test_evolve_csv_initial_data(tmp_path: Path, capsys: pytest.CaptureFixture) -> None:
    """Tabulated initial data are interpolated onto the mesh; unreadable tables are validation errors.

    :param tmp_path: The output directory.
    :param capsys: Captures the JSON error line.
    """
    table = tmp_path / "u0.csv"
    document = {"R": 5.0, "mesh_nodes": 33, "horizon": 0.01, "checkpoints": 2, "initial": {"kind": "csv", "path": str(table)}}
    path = write_config(tmp_path, document)

    assert run(tmp_path, "evolve", "--config", path) == 2
    assert json.loads(capsys.readouterr().err.strip().splitlines()[-1])["error"] == "ConfigError"

    table.write_text("r,u\n0.0,abc\n5.0,0.1\n")
    assert run(tmp_path, "evolve", "--config", path) == 2

    table.write_text("")
    assert run(tmp_path, "evolve", "--config", path) == 2

    table.write_text("r,u\n0.0,0.1\n2.5,0.1\n5.0,0.1\n")
    assert run(tmp_path, "evolve", "--config", path) == 0
    assert read(tmp_path, "evolve")["checkpoint_times"] == [0.0, 0.01]


def test_failed_sweep_exits_with_three(tmp_path: Path) -> None:
    """A sweep that loses domination is reported and exits with 3.

    :param tmp_path: The output directory.
    """
    path = write_config(
        tmp_path,
        {
            "R": 5.0,
            "mesh_nodes": 33,
            "initial": {"kind": "barrier_fraction", "lam": 2.0, "fraction": 0.9, "cap": 1.0},
            "boundary": {"kind": "zero"},
            "schedule": {"lam_start": 2.0, "lam_end": 0.01, "count": 3},
            "horizon": 0.01,
        },
    )
    assert run(tmp_path, "sweep", "--config", path) == 3
    out = read(tmp_path, "sweep")
    assert not out["completed"]
    assert out["first_failure"]["lambda"] < 2.0
    assert out["label"] == "truncated-domain demonstration"


def test_doubling_from_a_file(tmp_path: Path) -> None:
    """Spaces can be read from JSON; numeric point ids may be given as positions.

    :param tmp_path: The output directory.
    """
    space = tmp_path / "space.json"
    space.write_text(json.dumps({"points": ["a", "b", "c"], "dist": [[0, 1, 2], [1, 0, 1], [2, 1, 0]], "M": [1, 3, 7]}))
    assert run(tmp_path, "doubling", "--input", str(space), "--k", "1", "--y", "a") == 0
    out = read(tmp_path, "doubling")
    assert out == {"x": "b", "M_x": 3.0, "ball_radius": 1.0 / 3.0, "iterations": 1, "verified": True}
    assert run(tmp_path, "doubling", "--input", str(space), "--k", "1", "--y", "0") == 0
    assert read(tmp_path, "doubling")["x"] == "b"


COMMANDS = {
    "exponents": ["exponents", "--dim", "10", "--p", "3"],
    "shoot": ["shoot", "--dim", "3", "--p", "4", "--rmax", "10"],
    "intersections": ["intersections", "--dim", "3", "--p", "6", "--rmax", "50"],
    "census": ["census", "--pairs", "3:4,3:5,11:8", "--rmax", "50"],
    "delaunay": ["delaunay", "--dim", "3", "--min-value", "0.5"],
    "heteroclinic": ["heteroclinic", "--dim", "3", "--p", "4"],
    "supersolution": ["supersolution", "--dim", "3", "--p", "5", "--lambda", "2"],
    "doubling": ["doubling", "--random", "20", "--k", "1"],
}


@RunIf(jsonschema=True)
@pytest.mark.parametrize("name", sorted(COMMANDS))
def test_outputs_match_their_schemas(tmp_path: Path, name: str) -> None:
    """Every JSON output validates against the schema shipped for it.

    :param tmp_path: The output directory.
    :param name: The command.
    """
    import jsonschema

    assert run(tmp_path, *COMMANDS[name]) == 0
    schema = json.loads((SCHEMAS / f"{name}.schema.json").read_text())
    jsonschema.validate(read(tmp_path, name), schema)


@RunIf(jsonschema=True)
def test_run_outputs_match_their_schemas(tmp_path: Path) -> None:
    """Evolve and sweep reports validate too, including a failed sweep.

    :param tmp_path: The output directory.
    """
    import jsonschema

    evolve = write_config(tmp_path, {"R": 5.0, "mesh_nodes": 17, "horizon": 0.01, "checkpoints": 2})
    assert run(tmp_path, "evolve", "--config", evolve) == 0
    sweep = write_config(
        tmp_path,
        {"R": 5.0, "mesh_nodes": 17, "schedule": {"lam_start": 2.0, "lam_end": 1.0, "count": 2}, "horizon": 0.01},
    )
    assert run(tmp_path, "sweep", "--config", sweep) in (0, 3)
    for name in ("evolve", "sweep"):
        schema = json.loads((SCHEMAS / f"{name}.schema.json").read_text())
        jsonschema.validate(read(tmp_path, name), schema)

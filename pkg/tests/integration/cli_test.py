import pytest

from rhlab.cli import EXIT_CHECK_FAILED, EXIT_OK, run_experiment
from rhlab.config import CACHE_ENV, build_plan
from rhlab.report import emit_report


@pytest.fixture(autouse=True)
def no_cache_env(monkeypatch):
    monkeypatch.delenv(CACHE_ENV, raising=False)


def _folder(tmp_path, plan, manifest):
    return tmp_path / f"{plan.command}-{manifest.run_id[:12]}"


@pytest.mark.integration
@pytest.mark.parametrize(
    "values",
    [
        {"command": "check-cz"},
        {"command": "resolvent", "M": "2^12"},
        {"command": "algebra", "M": "2^10", "cases": "5"},
        {"command": "rho-k", "M": "2^12"},
        {"command": "commutator", "M": "2^14", "delta": "0.08"},
        {"command": "sweep-weak", "family": "residual", "M_list": "2^10, 2^11", "jobs": "2"},
    ],
)
def test__run_experiment(tmp_path, values):
    plan = build_plan(values | {"out": str(tmp_path)})

    manifest = run_experiment(plan)

    folder = _folder(tmp_path, plan, manifest)
    assert manifest.status == "ok"
    assert manifest.exit_code == EXIT_OK
    assert manifest.checks
    assert all(manifest.checks.values())
    for artifact in manifest.artifacts:
        assert (folder / artifact["path"]).exists()
    assert (folder / "manifest.json").exists()


@pytest.mark.integration
def test__run_experiment__when__resolvent_checks(tmp_path):
    plan = build_plan({"command": "resolvent", "M": "2^12", "lambda": "1, 0.5", "out": str(tmp_path)})

    manifest = run_experiment(plan)

    assert manifest.exit_code == EXIT_OK
    assert manifest.checks["resolvent_identity"]
    assert manifest.metrics["identity_error"] <= 1e-8


@pytest.mark.integration
def test__run_experiment__when__asymptotics_over_doublings(tmp_path):
    M_list = ", ".join(f"2^{k}" for k in range(10, 17))
    plan = build_plan({"command": "asymptotics", "M_list": M_list, "lambda": "1", "beta": "1", "out": str(tmp_path)})

    manifest = run_experiment(plan)

    assert manifest.status == "ok"
    assert manifest.checks["all_rows_ok"]
    assert manifest.checks["gamma_nonzero"]
    assert manifest.metrics["min_abs_gamma"] > 0
    assert manifest.metrics["comb1_decreased"]
    assert manifest.metrics["comb2_decreased"]
    for name in ("comb1_decreasing", "comb2_decreasing", "comb3_decreasing", "h2_at_zero_decay"):
        assert name in manifest.checks
    expected = EXIT_OK if all(manifest.checks.values()) else EXIT_CHECK_FAILED
    assert manifest.exit_code == expected


@pytest.mark.integration
def test__run_experiment__when__weak_sweeps_of_transform_and_square(tmp_path):
    M_list = ", ".join(f"2^{k}" for k in range(10, 17))
    plans = [
        build_plan({"command": "sweep-weak", "family": family, "M_list": M_list, "out": str(tmp_path / family)})
        for family in ("h", "hsq")
    ]

    single, square = (run_experiment(plan) for plan in plans)
    manifests = [
        _folder(tmp_path / family, plan, manifest) / "manifest.json"
        for family, plan, manifest in zip(("h", "hsq"), plans, (single, square))
    ]
    bundle = emit_report(manifests, tmp_path / "report")

    assert single.exit_code == EXIT_OK
    assert single.checks["weak_l1_bounded"]
    assert single.metrics["weak_l1_ratio"] <= 3
    assert "weak_l1_grows" in square.checks
    assert square.status == "ok"
    assert square.exit_code == (EXIT_OK if square.checks["weak_l1_grows"] else EXIT_CHECK_FAILED)
    assert len(bundle.charts) == 2
    for chart in bundle.charts:
        assert chart.suffix == ".svg"
        assert chart.exists()


@pytest.mark.integration
def test__run_experiment__when__hundred_algebra_pairs(tmp_path):
    plan = build_plan({"command": "algebra", "M": "2^10", "cases": "100", "out": str(tmp_path)})

    manifest = run_experiment(plan)

    assert manifest.exit_code == EXIT_OK
    assert manifest.checks["all_fits_ok"]
    assert manifest.checks["product_bound"]
    assert manifest.metrics["cases"] == 100
    assert 0 < manifest.metrics["worst_ratio"] <= 200


@pytest.mark.integration
def test__run_experiment__when__cache_used(tmp_path):
    values = {"command": "build-kernel", "M": "2^12", "cache": str(tmp_path / "cache"), "out": str(tmp_path)}

    first = run_experiment(build_plan(values))
    second = run_experiment(build_plan(values))

    assert first.metrics == second.metrics
    assert list((tmp_path / "cache").iterdir())

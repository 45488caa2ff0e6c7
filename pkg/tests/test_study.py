"""Config parsing, study runner, output files, and the CLI front end."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dgcentral import cli
from dgcentral.fields import Problem, l2_project
from dgcentral.mesh import Mesh1D, TensorMesh2D, alpha_mesh, random_mesh, uniform_mesh
from dgcentral.study import (
    DESK_CAP_1D,
    DESK_CAP_2D_LOW,
    ERROR_FLOOR,
    OUTPUT_ROOT_ENV,
    PROBLEMS,
    ConfigError,
    StudyConfig,
    build_mesh,
    dump_field,
    dump_mesh,
    load_config,
    output_root,
    parse_config,
    run_study,
    serialize_config,
)

BASE_1D = """
problem = advect1d_expsin
space.kind = P1D
space.degree = 1
mesh.family = uniform
study.ns = 8
time.T = 0.5
time.c = 0.2
time.scheme = rk4
"""

BASE_2D = """
problem = advect2d_sin
space.kind = Q2D
space.degree = 2
mesh.family = uniform
study.ns = 4
time.T = 0.1
time.c = 0.5
"""


def _with(base: str, **kv: str) -> str:
    return base + "".join(f"{k} = {v}\n" for k, v in kv.items())


class TestParseConfig:
    def test_minimal_defaults(self):
        cfg = parse_config(
            "problem = advect1d_expsin\n"
            "space.kind = P1D\n"
            "space.degree = 2\n"
            "mesh.family = uniform\n"
            "study.ns = 10, 20,40\n"
        )
        assert cfg.ns == (10, 20, 40)
        assert cfg.t_final == 1.0 and cfg.time_c == 0.01 and cfg.scheme == "rk4"
        assert cfg.alpha is None and cfg.fraction is None and cfg.seed is None
        assert cfg.domain is None and cfg.out_dir is None

    def test_comments_and_blank_lines(self):
        cfg = parse_config(
            "# full-line comment\n"
            "problem = advect1d_expsin  # trailing comment\n"
            "\n"
            "space.kind = P1D\n"
            "space.degree = 1\n"
            "mesh.family = uniform\n"
            "study.ns = 8\n"
        )
        assert cfg.problem == "advect1d_expsin"

    def test_override_wins_over_file(self):
        cfg = parse_config(BASE_1D, overrides=("space.degree=3", "study.ns=4,8"))
        assert cfg.degree == 3
        assert cfg.ns == (4, 8)

    def test_alpha_family(self):
        cfg = parse_config(_with(BASE_1D, **{"mesh.family": "alpha", "mesh.alpha": "0.1"}))
        assert cfg.family == "alpha" and cfg.alpha == 0.1
        assert cfg.label == "advect1d_expsin_P1D1_alpha_a0.1"

    def test_random_family(self):
        cfg = parse_config(
            _with(BASE_1D, **{"mesh.family": "random", "mesh.fraction": "0.3", "mesh.seed": "42"})
        )
        assert cfg.fraction == 0.3 and cfg.seed == 42
        assert cfg.label == "advect1d_expsin_P1D1_random_f0.3_s42"

    def test_domain_override(self):
        cfg = parse_config(_with(BASE_1D, **{"domain.lo": "-1.0", "domain.hi": "3.0"}))
        assert cfg.domain == (-1.0, 3.0)
        assert cfg.problem_def.domain == (-1.0, 3.0)

    @pytest.mark.parametrize(
        ("text", "match"),
        [
            (BASE_1D.replace("problem = advect1d_expsin", "junk"), "expected 'key = value'"),
            (BASE_1D.replace("problem = advect1d_expsin", "problem ="), "empty key or value"),
            (BASE_1D.replace("problem = advect1d_expsin\n", ""), "problem: missing"),
            (BASE_1D.replace("advect1d_expsin", "nope"), "problem: unknown"),
            (BASE_1D.replace("space.kind = P1D\n", ""), "space.kind: missing"),
            (BASE_1D.replace("space.degree = 1\n", ""), "space.degree: missing"),
            (BASE_1D.replace("space.degree = 1", "space.degree = two"), "expected an integer"),
            (BASE_1D.replace("space.degree = 1", "space.degree = -1"), "space:"),
            (BASE_1D.replace("P1D", "Q2D"), "is 2D but problem"),
            (BASE_1D.replace("mesh.family = uniform", "mesh.family = chebyshev"), "mesh.family"),
            (_with(BASE_1D.replace("uniform", "alpha")), "mesh.alpha: required"),
            (
                _with(BASE_1D.replace("uniform", "alpha"), **{"mesh.alpha": "1.0"}),
                r"\|alpha\| < 1",
            ),
            (_with(BASE_1D.replace("uniform", "random")), "mesh.fraction: required"),
            (
                _with(BASE_1D.replace("uniform", "random"), **{"mesh.fraction": "0.3"}),
                "mesh.seed: required",
            ),
            (
                _with(
                    BASE_1D.replace("uniform", "random"),
                    **{"mesh.fraction": "1.0", "mesh.seed": "1"},
                ),
                r"\[0, 1\)",
            ),
            (BASE_1D.replace("study.ns = 8\n", ""), "study.ns: missing"),
            (BASE_1D.replace("study.ns = 8", "study.ns = 8;16"), "comma-separated"),
            (BASE_1D.replace("study.ns = 8", "study.ns = 0,8"), "positive cell count"),
            (
                _with(
                    BASE_1D.replace("uniform", "alpha").replace("study.ns = 8", "study.ns = 1"),
                    **{"mesh.alpha": "0.1"},
                ),
                "N >= 2",
            ),
            (BASE_1D.replace("time.T = 0.5", "time.T = 0"), "time.T"),
            (BASE_1D.replace("time.c = 0.2", "time.c = -1"), "time.c"),
            (BASE_1D.replace("rk4", "rk99"), "unknown scheme"),
            (_with(BASE_1D, **{"domain.lo": "0.0"}), "both or neither"),
            (
                _with(BASE_1D, **{"domain.lo": "1.0", "domain.hi": "1.0"}),
                "must exceed",
            ),
            (_with(BASE_1D, **{"mesh.spice": "hot"}), "unknown config keys"),
        ],
    )
    def test_rejects_invalid(self, text, match):
        with pytest.raises(ConfigError, match=match):
            parse_config(text)

    def test_rejects_malformed_override(self):
        with pytest.raises(ConfigError, match="key=value"):
            parse_config(BASE_1D, overrides=("study.ns:4",))


class TestSerializeRoundTrip:
    def test_all_families_round_trip(self):
        configs = [
            parse_config(BASE_1D),
            parse_config(_with(BASE_1D, **{"mesh.family": "alpha", "mesh.alpha": "0.1"})),
            parse_config(
                _with(
                    BASE_1D,
                    **{"mesh.family": "random", "mesh.fraction": "0.3", "mesh.seed": "42"},
                )
            ),
            parse_config(_with(BASE_2D, **{"output.dir": "results/demo"})),
        ]
        for cfg in configs:
            assert parse_config(serialize_config(cfg)) == cfg

    @given(
        degree=st.integers(min_value=0, max_value=4),
        family=st.sampled_from(["uniform", "alpha", "random"]),
        alpha=st.floats(min_value=-0.9, max_value=0.9, allow_nan=False),
        fraction=st.floats(min_value=0.0, max_value=0.9, allow_nan=False),
        seed=st.integers(min_value=0, max_value=2**31),
        ns=st.lists(st.integers(min_value=2, max_value=5000), min_size=1, max_size=6),
        t_final=st.floats(min_value=1e-3, max_value=50.0, allow_nan=False),
        time_c=st.floats(min_value=1e-4, max_value=2.0, allow_nan=False),
        with_domain=st.booleans(),
    )
    @settings(max_examples=60, deadline=None)
    def test_round_trip_is_identity(
        self, degree, family, alpha, fraction, seed, ns, t_final, time_c, with_domain
    ):
        cfg = StudyConfig(
            problem="advect1d_expsin",
            space_kind="P1D",
            degree=degree,
            family=family,
            ns=tuple(ns),
            t_final=t_final,
            time_c=time_c,
            alpha=alpha if family == "alpha" else None,
            fraction=fraction if family == "random" else None,
            seed=seed if family == "random" else None,
            domain=(-2.5, 7.25) if with_domain else None,
            out_dir="results/prop" if with_domain else None,
        )
        assert parse_config(serialize_config(cfg)) == cfg


class TestShippedConfigs:
    def test_all_configs_parse(self):
        import pathlib

        paths = sorted(pathlib.Path("configs").glob("*.cfg"))
        assert len(paths) == 7
        for path in paths:
            cfg = load_config(path)
            assert cfg.out_dir is not None and cfg.out_dir.startswith("results/")
            assert parse_config(serialize_config(cfg)) == cfg

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError, match="cannot read"):
            load_config(tmp_path / "nope.cfg")


class TestBuildMesh:
    def test_uniform(self):
        cfg = parse_config(BASE_1D)
        mesh = build_mesh(cfg, 8)
        assert isinstance(mesh, Mesh1D)
        np.testing.assert_allclose(mesh.nodes, uniform_mesh(8, (0.0, 2.0 * np.pi)).nodes)

    def test_alpha(self):
        cfg = parse_config(_with(BASE_1D, **{"mesh.family": "alpha", "mesh.alpha": "0.25"}))
        np.testing.assert_array_equal(
            build_mesh(cfg, 6).nodes, alpha_mesh(6, 0.25, (0.0, 2.0 * np.pi)).nodes
        )

    def test_random_2d_axes_use_independent_seeds(self):
        cfg = parse_config(
            _with(BASE_2D, **{"mesh.family": "random", "mesh.fraction": "0.3", "mesh.seed": "9"})
        )
        mesh = build_mesh(cfg, 10)
        assert isinstance(mesh, TensorMesh2D)
        dom = (0.0, 2.0 * np.pi)
        np.testing.assert_array_equal(mesh.mesh_x.nodes, random_mesh(10, 0.3, 9, dom).nodes)
        np.testing.assert_array_equal(mesh.mesh_y.nodes, random_mesh(10, 0.3, 10, dom).nodes)
        assert not np.array_equal(mesh.mesh_x.nodes, mesh.mesh_y.nodes)


class TestRunStudy:
    def test_writes_tables_and_is_reproducible(self, tmp_path):
        cfg = parse_config(
            _with(
                BASE_1D.replace("study.ns = 8", "study.ns = 8,16"),
                **{
                    "mesh.family": "random",
                    "mesh.fraction": "0.3",
                    "mesh.seed": "7",
                    "output.dir": str(tmp_path),
                },
            )
        )
        table = run_study(cfg)
        assert table.ns == [8, 16]
        csv_path = tmp_path / f"{cfg.label}.csv"
        md_path = tmp_path / f"{cfg.label}.md"
        assert csv_path.is_file() and md_path.is_file()
        # a rerun must byte-for-byte reproduce every artifact
        first = {p.name: p.read_bytes() for p in tmp_path.iterdir()}
        run_study(cfg)
        assert {p.name: p.read_bytes() for p in tmp_path.iterdir()} == first

    def test_random_family_dumps_realized_nodes(self, tmp_path):
        cfg = parse_config(
            _with(
                BASE_1D,
                **{
                    "mesh.family": "random",
                    "mesh.fraction": "0.3",
                    "mesh.seed": "7",
                    "output.dir": str(tmp_path),
                },
            )
        )
        run_study(cfg)
        nodes_path = tmp_path / f"{cfg.label}_nodes_N8.csv"
        lines = nodes_path.read_text().splitlines()
        assert lines[0] == "x"
        written = np.array([float(tok) for tok in lines[1:]])
        np.testing.assert_array_equal(written, build_mesh(cfg, 8).nodes)

    def test_error_columns_match_direct_computation(self, tmp_path):
        from dgcentral.metrics import error_l2
        from dgcentral.operators import SpatialOperator
        from dgcentral.timestepping import IntegrationConfig, integrate

        cfg = parse_config(_with(BASE_1D, **{"output.dir": str(tmp_path)}))
        table = run_study(cfg)
        prob = cfg.problem_def
        mesh = build_mesh(cfg, 8)
        op = SpatialOperator(mesh, cfg.space)
        u = integrate(
            op.apply_rhs,
            l2_project(prob.initial, mesh, cfg.space),
            IntegrationConfig(t_final=0.5, c=0.2),
        )
        assert table.e2[0] == error_l2(prob.exact, u, 0.5)

    def test_desk_cap_filters_levels(self):
        cfg = parse_config(BASE_2D, overrides=(f"study.ns=4,{2 * DESK_CAP_2D_LOW}",))
        table = run_study(cfg)
        assert table.ns == [4]

    def test_all_levels_capped_is_an_error(self):
        cfg = parse_config(BASE_1D, overrides=(f"study.ns={2 * DESK_CAP_1D}",))
        with pytest.raises(ConfigError, match="paper scale"):
            run_study(cfg)

    def test_paper_scale_lifts_cap(self):
        cfg = parse_config(
            BASE_1D,
            overrides=(
                f"study.ns={DESK_CAP_1D + 80}",
                "time.T=0.05",
                "time.c=0.3",
            ),
        )
        table = run_study(cfg, paper_scale=True)
        assert table.ns == [DESK_CAP_1D + 80]

    def test_stops_at_double_precision_floor(self):
        PROBLEMS["const1d_test"] = Problem(
            name="const1d_test",
            dimension=1,
            domain=(0.0, 2.0 * np.pi),
            initial=lambda x: np.ones_like(x),
            exact=lambda x, t: np.ones_like(x),
        )
        try:
            cfg = StudyConfig(
                problem="const1d_test",
                space_kind="P1D",
                degree=1,
                family="uniform",
                ns=(4, 8, 16),
                t_final=0.5,
                time_c=0.2,
            )
            messages: list[str] = []
            table = run_study(cfg, log=messages.append)
            # a constant is advected exactly, so the very first level hits the floor
            assert table.ns == [4]
            assert table.e2[0] < ERROR_FLOOR
            assert any("floor" in msg for msg in messages)
        finally:
            PROBLEMS.pop("const1d_test")

    def test_output_root_env_rebases_relative_dirs(self, tmp_path, monkeypatch):
        monkeypatch.setenv(OUTPUT_ROOT_ENV, str(tmp_path))
        cfg = parse_config(_with(BASE_1D, **{"output.dir": "sub/demo"}))
        run_study(cfg)
        assert (tmp_path / "sub" / "demo" / f"{cfg.label}.csv").is_file()

    def test_output_root_unset(self, monkeypatch):
        monkeypatch.delenv(OUTPUT_ROOT_ENV, raising=False)
        assert output_root() is None


class TestDumps:
    def test_dump_mesh_1d(self, tmp_path):
        cfg = parse_config(BASE_1D, overrides=("study.ns=4,8",))
        paths = dump_mesh(cfg, tmp_path)
        assert [p.name for p in paths] == [
            f"{cfg.label}_mesh_N4.csv",
            f"{cfg.label}_mesh_N8.csv",
        ]
        lines = paths[0].read_text().splitlines()
        assert lines[0] == "x" and len(lines) == 6  # N+1 nodes

    def test_dump_mesh_2d(self, tmp_path):
        cfg = parse_config(BASE_2D, overrides=("study.ns=5",))
        paths = dump_mesh(cfg, tmp_path)
        assert [p.name for p in paths] == [
            f"{cfg.label}_mesh_N5_x.csv",
            f"{cfg.label}_mesh_N5_y.csv",
        ]
        for path in paths:
            assert len(path.read_text().splitlines()) == 7

    def test_dump_mesh_2d_alpha_17(self, tmp_path):
        # the plot-ready dump of the 17x17 alpha=0.3 mesh: 18 nodes per axis
        cfg = parse_config(
            _with(BASE_2D, **{"mesh.family": "alpha", "mesh.alpha": "0.3"}),
            overrides=("study.ns=17",),
        )
        paths = dump_mesh(cfg, tmp_path)
        assert len(paths) == 2
        for path in paths:
            nodes = [float(tok) for tok in path.read_text().splitlines()[1:]]
            assert len(nodes) == 18
            assert nodes[0] == 0.0 and nodes[-1] == pytest.approx(2.0 * np.pi)

    def test_dump_field_1d(self, tmp_path):
        cfg = parse_config(BASE_1D, overrides=("space.degree=2", "study.ns=4,8"))
        path = dump_field(cfg, tmp_path)
        assert path.name == f"{cfg.label}_field_N4.csv"
        lines = path.read_text().splitlines()
        assert lines[0] == "x,c0,c1,c2"
        assert len(lines) == 5
        mesh = build_mesh(cfg, 4)
        field = l2_project(cfg.problem_def.initial, mesh, cfg.space)
        row = [float(tok) for tok in lines[1].split(",")]
        assert row[0] == mesh.centers[0]
        np.testing.assert_array_equal(row[1:], field.coeffs[0])

    def test_dump_field_2d(self, tmp_path):
        cfg = parse_config(BASE_2D, overrides=("space.degree=1",))
        path = dump_field(cfg, tmp_path)
        lines = path.read_text().splitlines()
        assert lines[0] == "x,y,c0,c1,c2,c3"
        assert len(lines) == 1 + 16  # 4x4 cells


class TestCli:
    def _write(self, tmp_path, text: str):
        path = tmp_path / "study.cfg"
        path.write_text(text)
        return path

    def test_run_ok(self, tmp_path, capsys):
        out = tmp_path / "res"
        path = self._write(
            tmp_path, _with(BASE_1D.replace("study.ns = 8", "study.ns = 8,16"), **{"output.dir": str(out)})
        )
        assert cli.main(["run", str(path)]) == 0
        captured = capsys.readouterr()
        assert "N=     8" in captured.out and "| N " in captured.out
        assert (out / "advect1d_expsin_P1D1_uniform.csv").is_file()

    def test_run_with_overrides(self, tmp_path, capsys):
        path = self._write(tmp_path, _with(BASE_1D, **{"output.dir": str(tmp_path / "res")}))
        assert cli.main(["run", str(path), "--set", "space.degree=2"]) == 0
        assert (tmp_path / "res" / "advect1d_expsin_P1D2_uniform.csv").is_file()

    def test_bad_config_exits_1(self, tmp_path, capsys):
        path = self._write(tmp_path, _with(BASE_1D, **{"mesh.spice": "hot"}))
        assert cli.main(["run", str(path)]) == 1
        assert "config error:" in capsys.readouterr().err

    def test_missing_file_exits_1(self, tmp_path, capsys):
        assert cli.main(["run", str(tmp_path / "nope.cfg")]) == 1
        assert "config error:" in capsys.readouterr().err

    def test_divergence_exits_2(self, tmp_path, capsys):
        # c = 1.0 is far beyond the stable step size; the run blows up to inf
        path = self._write(
            tmp_path,
            BASE_1D.replace("space.degree = 1", "space.degree = 2")
            .replace("study.ns = 8", "study.ns = 320")
            .replace("time.T = 0.5", "time.T = 10.0")
            .replace("time.c = 0.2", "time.c = 1.0"),
        )
        assert cli.main(["run", str(path)]) == 2
        assert "non-finite" in capsys.readouterr().err

    def test_verify_suite_ok(self, capsys):
        assert cli.main(["verify", "superconvergence"]) == 0
        out = capsys.readouterr().out
        assert "PASS" in out and "FAIL" not in out

    def test_verify_unknown_suite_exits_1(self, capsys):
        assert cli.main(["verify", "bogus"]) == 1
        assert "error:" in capsys.readouterr().err

    def test_verify_failure_exits_3(self, capsys, monkeypatch):
        monkeypatch.setattr(cli, "run_suite", lambda name: ("FAIL boom\n", False))
        assert cli.main(["verify", "energy"]) == 3
        assert "boom" in capsys.readouterr().out

    def test_paper_scale_flag(self, tmp_path, capsys):
        path = self._write(
            tmp_path,
            BASE_1D.replace("study.ns = 8", f"study.ns = {DESK_CAP_1D + 80}")
            .replace("time.T = 0.5", "time.T = 0.05")
            .replace("time.c = 0.2", "time.c = 0.3"),
        )
        assert cli.main(["run", str(path)]) == 1
        assert "paper scale" in capsys.readouterr().err
        assert cli.main(["run", str(path), "--paper-scale"]) == 0

    def test_dump_mesh_cli(self, tmp_path, capsys):
        path = self._write(tmp_path, BASE_1D)
        assert cli.main(["dump-mesh", str(path), "--out", str(tmp_path)]) == 0
        printed = capsys.readouterr().out.strip().splitlines()
        assert len(printed) == 1 and printed[0].endswith("_mesh_N8.csv")

    def test_dump_field_cli(self, tmp_path, capsys):
        path = self._write(tmp_path, BASE_1D)
        assert cli.main(["dump-field", str(path), "--out", str(tmp_path)]) == 0
        assert capsys.readouterr().out.strip().endswith("_field_N8.csv")

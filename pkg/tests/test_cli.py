import re
import xml.etree.ElementTree as ET

import numpy as np
import pytest
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from hjcrt import Grid, LevelMask, SolveConfig, ValueField, run_algorithm1, solve_improved, sublevel
from hjcrt import io
from hjcrt.cli import main
from hjcrt.config import ConfigError, build_run_config, parse_config
from hjcrt.render import RenderError, render_slice, take_slice

from .conftest import linear_grid

LINEAR_CONFIG = """\
# small linear run on the standard square domain
scenario.name = linear2d
grid.lo = -2, -2
grid.hi = 2, 2
grid.counts = 31, 31
solve.costs = 0.25, 0.5, 0.75, 1
output.items = field, masks, svg
"""

SVG_NS = "{http://www.w3.org/2000/svg}"


def _write(tmp_path, text, name="run.cfg"):
    path = tmp_path / name
    path.write_text(text)
    return path


def _polylines(svg: str):
    return ET.fromstring(svg).iter(f"{SVG_NS}polyline")


# -- file formats -----------------------------------------------------------

grids = st.builds(
    lambda n, per, lo, width: Grid((lo, 0.0), (lo + width, 1.0), (n, n + 1), (False, per)),
    st.integers(3, 6), st.booleans(), st.floats(-10, 10), st.floats(0.1, 10),
)


@settings(suppress_health_check=[HealthCheck.function_scoped_fixture])
@given(grid=grids, data=st.data(), t=st.floats(0, 5), horizon=st.floats(0, 5))
def test_field_round_trip_is_bit_identical(tmp_path, grid, data, t, horizon):
    values = data.draw(arrays(np.float64, grid.shape, elements=st.floats(-1e6, 1e6)))
    path = tmp_path / "f.hjrt"
    io.write_field(path, ValueField(grid, values, t, horizon))
    back = io.read_field(path)
    assert back.grid == grid and back.time_label == t and back.horizon == horizon
    assert back.values.tobytes() == values.tobytes()


@settings(suppress_health_check=[HealthCheck.function_scoped_fixture])
@given(grid=grids, data=st.data(), level=st.floats(-3, 3))
def test_mask_round_trip(tmp_path, grid, data, level):
    member = data.draw(arrays(bool, grid.shape))
    path = tmp_path / "m.csv"
    io.write_mask(path, LevelMask(grid, member, level, "improved"))
    back = io.read_mask(path)
    assert back.grid == grid and back.level == level and back.source == "improved"
    np.testing.assert_array_equal(back.member, member)


def test_field_file_layout(tmp_path):
    g = Grid((0.0, 0.0), (1.0, 2.0), (3, 4), (False, True))
    values = np.arange(12, dtype=float).reshape(3, 4)
    io.write_field(tmp_path / "f.hjrt", ValueField(g, values, 0.0, 1.5))
    raw = (tmp_path / "f.hjrt").read_bytes()
    assert raw.startswith(b"HJRT1\n")
    header, payload = raw[6:].split(b"\n", 1)
    assert header.split()[:9] == [b"2", b"3", b"0.0", b"1.0", b"0", b"4", b"0.0", b"2.0", b"1"]
    # row-major, last dimension fastest
    np.testing.assert_array_equal(np.frombuffer(payload, "<f8")[:5], [0, 1, 2, 3, 4])


def test_corrupt_files_raise_format_error(tmp_path):
    bad = tmp_path / "bad.hjrt"
    bad.write_bytes(b"HJRT1\n2 3 0 1 0\n")
    with pytest.raises(io.FormatError):
        io.read_field(bad)
    short = tmp_path / "short.hjrt"
    io.write_field(short, ValueField(linear_grid(3), np.zeros((3, 3))))
    short.write_bytes(short.read_bytes()[:-8])
    with pytest.raises(io.FormatError):
        io.read_field(short)
    mask = tmp_path / "m.csv"
    mask.write_text("2,3,0.0,1.0,0,3,0.0,1.0,0,0.5,x\n7,0\n")
    with pytest.raises(io.FormatError):
        io.read_mask(mask)


# -- config -----------------------------------------------------------------

def test_config_parses_linear_run():
    cfg = build_run_config(parse_config(LINEAR_CONFIG))
    assert cfg.scenario.name == "linear2d" and cfg.grid.counts == (31, 31)
    assert cfg.costs == [0.25, 0.5, 0.75, 1.0] and cfg.outputs == ("field", "masks", "svg")


def test_config_pursuit_parameters():
    text = ("scenario.name = pursuit\nscenario.lambda = 0.1\ngrid.lo = -5, -10, 0\ngrid.hi = 20, 10, 6.283185307179586\n"
            "grid.counts = 11, 11, 11\ngrid.periodic = false, false, true\nsolve.costs = 2\n")
    cfg = build_run_config(parse_config(text))
    assert cfg.scenario.params["lambda"] == 0.1 and cfg.grid.periodic == (False, False, True)


@pytest.mark.parametrize("text,line,fragment", [
    (LINEAR_CONFIG.replace("solve.costs = 0.25, 0.5, 0.75, 1", "solve.costs ="), 6, "admissible cost"),
    (LINEAR_CONFIG.replace("linear2d", "linear3d"), 2, "unknown scenario"),
    (LINEAR_CONFIG + "solve.cfl = 2\n", 8, "cfl"),
    (LINEAR_CONFIG + "bogus.key = 1\n", 8, "unknown key"),
    (LINEAR_CONFIG + "grid.lo = 0, 0\n", 8, "duplicate"),
    (LINEAR_CONFIG.replace("grid.counts = 31, 31", "grid.counts = 31, x"), 5, "expected numbers"),
    (LINEAR_CONFIG.replace("grid.counts = 31, 31", "grid.counts = 31, 31, 31"), 5, "state dimensions"),
    (LINEAR_CONFIG + "just words\n", 8, "key = value"),
])
def test_config_errors_name_the_line(text, line, fragment):
    with pytest.raises(ConfigError) as info:
        build_run_config(parse_config(text, "cfg"))
    assert f"cfg:{line}" in str(info.value) and fragment in str(info.value)


def test_config_missing_required_keys():
    with pytest.raises(ConfigError, match="scenario.name"):
        build_run_config(parse_config("grid.lo = 0, 0\n"))
    with pytest.raises(ConfigError, match="solve.costs"):
        build_run_config(parse_config("\n".join(LINEAR_CONFIG.splitlines()[:5])))


# -- rendering --------------------------------------------------------------

def test_render_constant_field_has_no_contours():
    g = linear_grid(11)
    svg = render_slice(ValueField(g, np.full(g.shape, 2.0)), {}, [3.0])
    assert list(_polylines(svg)) == []
    assert ">x0<" in svg and ">x1<" in svg


def test_render_band_mask_gives_two_horizontal_lines():
    g = linear_grid(41)
    band = LevelMask(g, np.abs(g.states()[1]) <= 0.5, 0.0, "analytic")
    lines = list(_polylines(render_slice(band)))
    assert len(lines) == 2
    for line in lines:
        pts = np.array([[float(v) for v in p.split(",")] for p in line.get("points").split()])
        assert np.ptp(pts[:, 1]) < 1e-6  # constant pixel row: horizontal
        assert np.ptp(pts[:, 0]) > 300


def test_render_linear_levels_are_nested_contours():
    res, _ = run_algorithm1(pytest.importorskip("hjcrt").builtin_linear2d(), linear_grid(41), [1.0])
    svg = render_slice(res.final_slice, {}, [0.25, 0.5, 0.75, 1.0])
    groups = list(ET.fromstring(svg).iter(f"{SVG_NS}g"))
    assert len(groups) == 4 and all(len(list(g.iter(f"{SVG_NS}polyline"))) >= 1 for g in groups)


def test_render_slices_pursuit_theta_and_checks_free_dims():
    g = Grid((-5.0, -10.0, 0.0), (20.0, 10.0, 2 * np.pi), (11, 11, 8), (False, False, True))
    f = ValueField(g, g.states()[0] ** 2 + g.states()[1] ** 2)
    arr, free, pinned = take_slice(f, {2: 2 * np.pi - 0.01})
    assert free == [0, 1] and pinned[2] == 0.0 and arr.shape == (11, 11)
    with pytest.raises(RenderError):
        render_slice(f, {}, [1.0])
    with pytest.raises(RenderError):
        render_slice(f, {5: 0.0}, [1.0])


def test_render_does_not_modify_inputs():
    g = linear_grid(21)
    values = np.random.default_rng(0).random(g.shape)
    f = ValueField(g, values.copy())
    render_slice(f, {}, [0.5])
    np.testing.assert_array_equal(f.values, values)


# -- command line -----------------------------------------------------------

def test_cli_run_writes_one_field_and_four_masks(tmp_path, capsys):
    cfg = _write(tmp_path, LINEAR_CONFIG)
    out = tmp_path / "out"
    assert main(["run", "--config", str(cfg), "--output-dir", str(out)]) == 0
    text = capsys.readouterr().out
    assert sorted(p.name for p in out.iterdir()) == [
        "field.hjrt", "mask_0p25.csv", "mask_0p5.csv", "mask_0p75.csv", "mask_1.csv", "slice.svg"]
    # summary counts equal the counts in the written masks
    for name, count in re.findall(r"mask \S+/(mask_\S+\.csv) level=\S+ nodes=(\d+)", text):
        assert io.read_mask(out / name).count == int(count)
    field = io.read_field(out / "field.hjrt")
    assert field.horizon == pytest.approx(1.1)
    assert io.read_mask(out / "mask_1.csv").member.tolist() == sublevel(field, 1.0).member.tolist()


def test_cli_threads_do_not_change_artifacts(tmp_path):
    cfg = _write(tmp_path, LINEAR_CONFIG.replace("field, masks, svg", "field"))
    assert main(["run", "--config", str(cfg), "--output-dir", str(tmp_path / "a")]) == 0
    assert main(["run", "--config", str(cfg), "--output-dir", str(tmp_path / "b"), "--threads", "3"]) == 0
    assert (tmp_path / "a/field.hjrt").read_bytes() == (tmp_path / "b/field.hjrt").read_bytes()


def test_cli_classical_mode(tmp_path):
    text = LINEAR_CONFIG.replace("solve.costs = 0.25, 0.5, 0.75, 1", "solve.mode = classical\nsolve.horizons = 0.5, 1")
    cfg = _write(tmp_path, text)
    assert main(["run", "--config", str(cfg), "--output-dir", str(tmp_path)]) == 0
    m05, m1 = io.read_mask(tmp_path / "mask_0p5.csv"), io.read_mask(tmp_path / "mask_1.csv")
    assert m05.source == "classical" and not np.any(m05.member & ~m1.member)


def test_cli_compare(tmp_path, capsys):
    cfg = _write(tmp_path, LINEAR_CONFIG.replace("field, masks, svg", "field, masks"))
    main(["run", "--config", str(cfg), "--output-dir", str(tmp_path)])
    capsys.readouterr()
    mask = str(tmp_path / "mask_1.csv")
    assert main(["compare", mask, mask]) == 0
    out = capsys.readouterr().out
    assert "e_vol 0.000000" in out and "sym_diff_nodes 0" in out
    assert main(["compare", str(tmp_path / "field.hjrt"), "--level", "1", "--analytic", "linear2d"]) == 0
    e_vol = float(re.search(r"e_vol (\S+)", capsys.readouterr().out).group(1))
    assert 0 < e_vol < 0.15
    assert main(["compare", str(tmp_path / "field.hjrt"), mask]) == 1


def test_cli_compare_grid_mismatch_exits_1(tmp_path):
    io.write_mask(tmp_path / "a.csv", LevelMask(linear_grid(5), np.ones((5, 5), bool), 1.0))
    io.write_mask(tmp_path / "b.csv", LevelMask(linear_grid(7), np.ones((7, 7), bool), 1.0))
    assert main(["compare", str(tmp_path / "a.csv"), str(tmp_path / "b.csv")]) == 1


def test_cli_render(tmp_path):
    g = linear_grid(21)
    io.write_field(tmp_path / "f.hjrt", ValueField(g, g.states()[0] ** 2 + g.states()[1] ** 2))
    assert main(["render", str(tmp_path / "f.hjrt"), "--levels", "1", "--output", str(tmp_path / "s.svg")]) == 0
    assert len(list(_polylines((tmp_path / "s.svg").read_text()))) == 1
    assert main(["render", str(tmp_path / "f.hjrt")]) == 1
    assert main(["render", str(tmp_path / "f.hjrt"), "--levels", "1", "--fix", "0=0"]) == 1


def test_cli_config_errors_exit_1(tmp_path, capsys):
    cfg = _write(tmp_path, LINEAR_CONFIG.replace("solve.costs = 0.25, 0.5, 0.75, 1", "solve.costs ="))
    assert main(["run", "--config", str(cfg)]) == 1
    assert "run.cfg:6" in capsys.readouterr().err
    assert main(["run", "--config", str(tmp_path / "missing.cfg")]) == 1
    assert main(["bogus"]) == 1
    assert main(["run", "--config", str(cfg), "--threads", "0"]) == 1


def test_cli_numerical_failure_exits_2(tmp_path, monkeypatch):
    from hjcrt import cli
    from hjcrt.solver import InstabilityError

    def explode(*args, **kwargs):
        raise InstabilityError(3, 0.5, (1, 2))

    monkeypatch.setattr(cli, "run_algorithm1", explode)
    assert main(["run", "--config", str(_write(tmp_path, LINEAR_CONFIG))]) == 2


def test_cli_verify_reuses_field(tmp_path, capsys):
    cfg = _write(tmp_path, LINEAR_CONFIG.replace("field, masks, svg", "field") + "verify.samples = 20\n")
    main(["run", "--config", str(cfg), "--output-dir", str(tmp_path)])
    capsys.readouterr()
    code = main(["verify", "--config", str(cfg), "--field", str(tmp_path / "field.hjrt"), "--level", "0.5",
                 "--seed", "4", "--output-dir", str(tmp_path)])
    assert code == 0
    out = capsys.readouterr().out
    assert "samples 20" in out and "seed 4" in out
    assert (tmp_path / "verify.txt").read_text() == out


def test_improved_field_file_reproduces_solver_output(tmp_path, linear2d):
    res = solve_improved(linear2d, linear_grid(21), SolveConfig(0.5))
    io.write_field(tmp_path / "f.hjrt", res.final_slice)
    assert io.read_any(tmp_path / "f.hjrt").values.tobytes() == res.final_slice.values.tobytes()
    io.write_mask(tmp_path / "m.csv", sublevel(res.final_slice, 0.2))
    assert isinstance(io.read_any(tmp_path / "m.csv"), LevelMask)

import math
from pathlib import Path

import numpy as np
import pytest

from plotkit.cli import main
from plotkit.core import PlotSpec, SchemaError, load_series, render

DATA = Path(__file__).parent / "data"
COMPARE_INPUTS = [
    (DATA / "zshape2d-adaptive-theta0.25.csv", "adaptive 0.25"),
    (DATA / "zshape2d-adaptive-theta0.125.csv", "adaptive 0.125"),
    (DATA / "zshape2d-adaptive-theta0.0625.csv", "adaptive 0.0625"),
    (DATA / "zshape2d-uniform.csv", "uniform"),
]


def write_power_law_csv(path, ns, exponent=-0.5):
    header = ("step,n_elements,eta_sq,rho_sq,oscD_sq,oscN_sq,oscT_sq,"
              "jump_sq,volume_sq,neumann_sq,energy_error,branch,marked")
    rows = [header]
    for k, n in enumerate(ns):
        eta = float(n) ** exponent
        rows.append(f"{k},{n},{eta * eta:.17g},{eta * eta:.17g},0,0,0,0,0,0,,element,1")
    path.write_text("\n".join(rows) + "\n")


def loglog_interp(xs, ys, x):
    return math.exp(np.interp(math.log(x), np.log(xs), np.log(ys)))


def test_render_compare_figure(tmp_path):
    out = tmp_path / "compare.png"
    result = render(PlotSpec(inputs=COMPARE_INPUTS, output=out, slopes=[-0.5, -2 / 7]))
    assert out.exists() and out.stat().st_size > 0
    assert len(result.series) == 4
    assert len(result.guides) == 2

    uniform = result.series[-1]
    for adaptive in result.series[:-1]:
        for n, v in zip(adaptive.n, adaptive.values):
            if n < 1000 or n > uniform.n[-1]:
                continue
            assert v < loglog_interp(uniform.n, uniform.values, n), \
                f"adaptive point at N={n} not below the uniform curve"


def test_plotted_values_equal_csv_exactly():
    path = DATA / "zshape2d-uniform.csv"
    series = load_series(path, "uniform")
    raw = [line.split(",") for line in path.read_text().strip().splitlines()[1:]]
    expected = np.sqrt([float(r[2]) for r in raw])
    assert series.values.tolist() == expected.tolist()
    assert series.n.tolist() == [float(r[1]) for r in raw]


def test_synthetic_power_law_tracks_guide(tmp_path):
    csv = tmp_path / "power.csv"
    write_power_law_csv(csv, [10, 30, 100, 300, 1000, 3000], exponent=-0.5)
    out = tmp_path / "power.png"
    result = render(PlotSpec(inputs=[(csv, "synthetic")], output=out, slopes=[-0.5]))
    series = result.series[0]
    slope = np.polyfit(np.log(series.n), np.log(series.values), 1)[0]
    assert slope == pytest.approx(-0.5, abs=1e-12)
    guide = result.guides[0]
    assert guide.slope == -0.5
    # parallel: the ratio between guide and series is constant
    ratio = np.interp(series.n, guide.n, guide.values) / series.values
    assert np.allclose(ratio, ratio[0], rtol=1e-10)


def test_quantity_selection(tmp_path):
    series = load_series(DATA / "zshape2d-uniform.csv", "u", quantity="oscD_sq")
    assert (series.values > 0).all()
    energy = load_series(DATA / "zshape2d-uniform.csv", "u", quantity="energy_error")
    assert (energy.values > 0).all()  # not rooted, plain column


def test_missing_column_names_it(tmp_path):
    with pytest.raises(SchemaError, match="no_such_column"):
        load_series(DATA / "zshape2d-uniform.csv", "u", quantity="no_such_column")


def test_empty_csv_is_schema_error(tmp_path):
    empty = tmp_path / "empty.csv"
    empty.write_text("")
    with pytest.raises(SchemaError):
        load_series(empty, "e")
    header_only = tmp_path / "header.csv"
    header_only.write_text("step,n_elements,eta_sq\n")
    with pytest.raises(SchemaError):
        load_series(header_only, "h")


def test_render_is_deterministic(tmp_path):
    csv = tmp_path / "p.csv"
    write_power_law_csv(csv, [10, 100, 1000])
    a, b = tmp_path / "a.png", tmp_path / "b.png"
    render(PlotSpec(inputs=[(csv, "s")], output=a, slopes=[-0.5]))
    render(PlotSpec(inputs=[(csv, "s")], output=b, slopes=[-0.5]))
    assert a.read_bytes() == b.read_bytes()


def test_cli_renders_compare(tmp_path, capsys):
    out = tmp_path / "fig.png"
    argv = ["--out", str(out), "--slope", "-0.5", "--slope", "-0.2857",
            f"{DATA / 'zshape2d-adaptive-theta0.25.csv'}:adaptive",
            f"{DATA / 'zshape2d-uniform.csv'}:uniform"]
    assert main(argv) == 0
    assert out.exists() and out.stat().st_size > 0
    assert "wrote" in capsys.readouterr().out


def test_cli_empty_csv_exits_nonzero(tmp_path, capsys):
    empty = tmp_path / "empty.csv"
    empty.write_text("")
    assert main(["--out", str(tmp_path / "f.png"), str(empty)]) == 2
    assert "error" in capsys.readouterr().err


def test_cli_usage_error(tmp_path, capsys):
    assert main(["--out", str(tmp_path / "f.png"), "--bogus", "x.csv"]) == 1
    capsys.readouterr()


def test_no_inputs_rejected(tmp_path):
    with pytest.raises(SchemaError):
        PlotSpec(inputs=[], output=tmp_path / "x.png")

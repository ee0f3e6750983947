from __future__ import annotations

import csv
import math

import numpy as np
import pytest

from bgkmix.cli import diagnostics_header, emit_diagnostics, main
from bgkmix.grid import build_grid
from bgkmix.mixture import MixtureParameters
from bgkmix.solver import MaxwellianComponent, SimulationConfig, SolverState, initial_field, run_simulation

CONFIG = """
[grid]
velocity_dim = {d}
v_max = 6
n_nodes_per_axis = {nodes}

[parameters]
m1 = 1
m2 = 2
alpha = 0.5
delta = 0.5
epsilon = 0.5
chi12 = 0.2
chi21 = 0.2
aap_sign = physical

[initial.species1.0]
n = 1
u = 0.3, 0, 0
T = 1

[initial.species2.0]
n = 1
u = -0.2, 0, 0
T = 1.5

[time]
dt = 0.05
t_end = 0.5
cadence = 2

[suite]
samples = 6

[compare]
dts = 0.1, 0.05
t_end = 0.3
"""


@pytest.fixture
def cfg_path(tmp_path):
    def make(d=3, nodes=12, extra=""):
        p = tmp_path / f"run_{d}.ini"
        p.write_text(CONFIG.format(d=d, nodes=nodes) + extra)
        return str(p)
    return make


def _series(d=1, t_end=0.2):
    g = build_grid(velocity_dim=d, v_max=6.0, n_nodes_per_axis=24)
    u = tuple([0.3] + [0.0] * (d - 1))
    s = SolverState(initial_field(g, 1.0, [MaxwellianComponent(1.0, u, 1.0)], True),
                    initial_field(g, 1.0, [MaxwellianComponent(1.0, u, 1.0)], True), 0.0)
    return run_simulation(s, MixtureParameters(), SimulationConfig(dt=0.05, t_end=t_end)).ticks


def test_header():
    assert diagnostics_header(2) == ["t", "n1", "n2", "u1_x", "u1_y", "u2_x", "u2_y", "T1", "T2",
                                     "p_total_x", "p_total_y", "E_total", "entropy", "min_f1",
                                     "min_f2", "clipped_mass"]


def test_empty_series(tmp_path):
    path = tmp_path / "d.csv"
    emit_diagnostics([], path, 3)
    assert path.read_text().splitlines() == [",".join(diagnostics_header(3))]


def test_single_tick_round_trip(tmp_path):
    tk = _series(t_end=0.0)
    path = tmp_path / "d.csv"
    emit_diagnostics(tk, path)
    rows = list(csv.reader(open(path)))
    assert len(rows) == 2
    vals = [float(x) for x in rows[1]]
    expected = [tk[0].t, *tk[0].n, *tk[0].u[0], *tk[0].u[1], *tk[0].T, *tk[0].p_total,
                tk[0].E_total, tk[0].entropy, tk[0].min_f1, tk[0].min_f2, tk[0].clipped_mass]
    assert vals == expected


def test_equilibrium_columns_constant(tmp_path):
    path = tmp_path / "d.csv"
    emit_diagnostics(_series(d=2, t_end=1.0), path)
    rows = list(csv.DictReader(open(path)))
    for col in ("p_total_x", "p_total_y", "E_total"):
        vals = np.array([float(r[col]) for r in rows])
        assert np.ptp(vals) <= 1e-12 * max(1.0, np.abs(vals).max())


def test_write_failure(tmp_path):
    with pytest.raises(OSError) as exc:
        emit_diagnostics([], tmp_path / "missing" / "d.csv", 1)
    assert "missing" in str(exc.value)


def test_simulate_is_byte_identical(cfg_path, tmp_path, capsys):
    path = cfg_path()
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["simulate", "--config", path, "--out", str(a)]) == 0
    assert main(["simulate", "--config", path, "--out", str(b)]) == 0
    assert (a / "diagnostics.csv").read_bytes() == (b / "diagnostics.csv").read_bytes()
    assert (a / "config.ini").exists()
    lines = (a / "diagnostics.csv").read_text().splitlines()
    assert len(lines) == 1 + 6


def test_single_term_variant(cfg_path, tmp_path):
    out = tmp_path / "st"
    assert main(["simulate", "--config", cfg_path(), "--out", str(out), "--variant", "single-term"]) == 0
    assert "model_variant = single-term" in (out / "config.ini").read_text()


def test_estimates_seed_override(cfg_path, tmp_path, capsys):
    a, b, c = (tmp_path / x for x in "abc")
    assert main(["estimates", "--config", cfg_path(), "--out", str(a), "--seed", "3"]) == 0
    assert main(["estimates", "--config", cfg_path(), "--out", str(b), "--seed", "3"]) == 0
    assert main(["estimates", "--config", cfg_path(), "--out", str(c), "--seed", "4"]) == 0
    assert (a / "estimates.csv").read_bytes() == (b / "estimates.csv").read_bytes()
    assert (a / "estimates.csv").read_bytes() != (c / "estimates.csv").read_bytes()
    assert "failures 0" in capsys.readouterr().out


def test_bridge_and_compare(cfg_path, tmp_path, capsys):
    out = tmp_path / "br"
    assert main(["bridge", "--config", cfg_path(nodes=16), "--out", str(out)]) == 0
    rows = list(csv.DictReader(open(out / "macro.csv")))
    assert math.isnan(float(rows[0]["entropy"]))
    assert main(["compare", "--config", cfg_path(nodes=16), "--out", str(out)]) == 0
    comp = list(csv.DictReader(open(out / "compare.csv")))
    assert len(comp) == 2


def test_bridge_needs_3d(cfg_path, tmp_path, capsys):
    assert main(["bridge", "--config", cfg_path(d=1, nodes=32), "--out", str(tmp_path)]) == 1
    assert "velocity_dim" in capsys.readouterr().err


def test_config_error_exit(cfg_path, tmp_path, capsys):
    bad = cfg_path(extra="\n[output]\nbogus = 1\n")
    assert main(["simulate", "--config", bad, "--out", str(tmp_path)]) == 1
    assert main(["simulate", "--config", str(tmp_path / "none.ini")]) == 1


def test_runtime_error_exit(cfg_path, tmp_path, capsys):
    # an empty box is a valid config but a vacuum cell at the first step
    path = cfg_path()
    text = open(path).read().replace("n = 1\n", "n = 0\n")
    open(path, "w").write(text)
    assert main(["simulate", "--config", path, "--out", str(tmp_path)]) == 2
    assert "runtime error" in capsys.readouterr().err


def test_runtime_admissibility_is_config_error(cfg_path, tmp_path, capsys):
    # the single-term positivity ratios depend on the densities, so they are checked at run time
    path = cfg_path()
    text = open(path).read().replace("chi12 = 0.2", "chi12 = 50")
    open(path, "w").write(text)
    assert main(["simulate", "--config", path, "--out", str(tmp_path), "--variant", "single-term"]) == 1
    assert "chi12" in capsys.readouterr().err

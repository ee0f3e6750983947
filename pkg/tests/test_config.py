from __future__ import annotations

import pytest

from bgkmix.config import RunConfig, parse_config
from bgkmix.errors import AdmissibilityError, ConfigurationError
from bgkmix.macroscopic import gamma_of_c

MINIMAL = """
[grid]
velocity_dim = 1
v_max = 8
n_nodes_per_axis = 64

[parameters]
m1 = 1
m2 = 1
alpha = 0.5
delta = 0.5
epsilon = 1

[initial.species1.0]
n = 1
u = 0.2
T = 1

[initial.species2.0]
n = 1
T = 2

[time]
dt = 0.01
t_end = 0.1
"""


def _with(text, section, line):
    return text.replace(f"[{section}]\n", f"[{section}]\n{line}\n", 1)


def test_minimal_fills_defaults():
    cfg = parse_config(MINIMAL, "simulate")
    assert cfg.model_variant == "two-term"
    assert cfg.params.gamma == 0.0 and cfg.params.nu21t == 1.0
    assert cfg.grid.n_cells == 1 and cfg.time.cadence == 1
    assert cfg.suite.master_seed == 20240607
    assert cfg.species1[0].u == (0.2,)


def test_echo_round_trips():
    cfg = parse_config(MINIMAL, "simulate")
    text = cfg.to_text()
    again = parse_config(text, "simulate")
    assert again == cfg
    assert again.to_text() == text


def test_gamma_and_c_exclusive():
    text = _with(_with(MINIMAL, "parameters", "gamma = 0.01"), "parameters", "c = 0.0")
    with pytest.raises(ConfigurationError) as exc:
        parse_config(text)
    assert "mutually exclusive" in str(exc.value)


def test_delta_and_lambda_exclusive():
    with pytest.raises(ConfigurationError):
        parse_config(_with(MINIMAL, "parameters", "lambda_u = 0.1"))


def test_delta_bounds_error():
    text = MINIMAL.replace("delta = 0.5", "delta = -0.9")
    with pytest.raises(AdmissibilityError) as exc:
        parse_config(text)
    assert exc.value.key == "delta"
    assert "delta admissibility" in str(exc.value) and "[0, 1]" in str(exc.value)


def test_gamma_bound_error_names_constraint():
    # the bound is 0.5 for d = 1, delta = 1/2 and equal masses
    text = _with(MINIMAL, "parameters", "gamma = 0.6")
    with pytest.raises(AdmissibilityError) as exc:
        parse_config(text)
    assert exc.value.key == "gamma" and "gamma admissibility" in str(exc.value)


def test_c_derives_gamma():
    text = _with(MINIMAL, "parameters", "c = 0.1")
    cfg = parse_config(text)
    assert cfg.params.gamma == pytest.approx(gamma_of_c(1.0, 0.5, 0.1, 1))
    assert cfg.c == 0.1


def test_c_out_of_range_rejected():
    with pytest.raises(AdmissibilityError):
        parse_config(_with(MINIMAL, "parameters", "c = 0.45"))


def test_lambda_derives_delta():
    text = MINIMAL.replace("delta = 0.5", "lambda_u = 0.25")
    cfg = parse_config(text)
    # m1 nu12 n1 n2 = 1 * 1 * 1/2 for unit densities
    assert cfg.params.delta == pytest.approx(0.5)


@pytest.mark.parametrize("section, line", [("grid", "nodes = 3"), ("parameters", "beta = 1"),
                                           ("time", "steps = 3")])
def test_unknown_key(section, line):
    with pytest.raises(ConfigurationError) as exc:
        parse_config(_with(MINIMAL, section, line))
    assert exc.value.key == line.split()[0]


def test_unknown_section():
    with pytest.raises(ConfigurationError):
        parse_config(MINIMAL + "\n[extras]\nx = 1\n")


@pytest.mark.parametrize("key", ["m1", "alpha", "epsilon"])
def test_missing_key(key):
    text = "\n".join(l for l in MINIMAL.splitlines() if not l.startswith(f"{key} ="))
    with pytest.raises(ConfigurationError) as exc:
        parse_config(text)
    assert exc.value.key == key


def test_missing_initial_for_simulate():
    text = MINIMAL.split("[initial.species1.0]")[0]
    parse_config(text, "estimates")
    with pytest.raises(ConfigurationError):
        parse_config(text, "simulate")


def test_bad_number():
    with pytest.raises(ConfigurationError) as exc:
        parse_config(MINIMAL.replace("dt = 0.01", "dt = fast"))
    assert exc.value.key == "dt"


def test_malformed():
    with pytest.raises(ConfigurationError):
        parse_config("no sections here")


def test_overrides():
    cfg = parse_config(MINIMAL)
    assert cfg.with_seed(7).suite.master_seed == 7
    v = cfg.with_variant("single-term")
    assert v.model_variant == v.params.model_variant == "single-term"
    with pytest.raises(ConfigurationError):
        cfg.with_variant("three-term")

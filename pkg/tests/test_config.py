from pathlib import Path

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lockspring.config import ToolkitConfig, dumps, loads, parse_config
from lockspring.errors import ConfigError
from lockspring.optimizer import Bounds, Objective
from lockspring.workloop import Protocol

DATA = Path(__file__).parent / "data"


def test_empty_is_defaults():
    cfg = loads("")
    assert cfg == ToolkitConfig()
    assert cfg.spring.stiffness_N_per_mm == 14.8
    assert cfg.clutch.pulley_radius_mm == 12.0
    assert cfg.simulation.protocol == Protocol.accumulation()


def test_none_path_is_defaults():
    assert parse_config(None) == ToolkitConfig()


def test_round_trip_defaults():
    cfg = ToolkitConfig()
    assert loads(dumps(cfg)) == cfg
    assert dumps(loads(dumps(cfg))) == dumps(cfg)


def test_golden_custom():
    cfg = parse_config(DATA / "custom.ini")
    assert cfg.spring.stiffness_N_per_mm == 20.0
    assert cfg.spring.max_deflection_mm == 60.0
    assert cfg.clutch.wrap_count_override == 6.0
    assert cfg.loss_model.engagement_slip_mm == 1.5
    assert [str(p) for p in cfg.simulation.protocol.phases] == [
        "compress_to:10", "unload_until_contact_lost", "compress_to:40",
        "unload_until_contact_lost", "release_clutch",
    ]
    assert cfg.simulation.protocol.crosshead_speed_mm_per_s == 1.0
    assert cfg.optimizer.drum_radius_mm == Bounds(12.0, 25.0)
    assert cfg.optimizer.objective.kind is Objective.WEIGHTED
    assert cfg.optimizer.grid_budget == 625
    assert loads(dumps(cfg)) == cfg


def test_speed_before_phases():
    text = "[protocol]\ncrosshead_speed_mm_per_s = 2\nphases = compress_to:5, release\n"
    assert loads(text).simulation.protocol.crosshead_speed_mm_per_s == 2.0


@pytest.mark.parametrize(
    "name, line, fragment",
    [("bad_value.ini", 6, "safety_factor"), ("unknown_key.ini", 3, "unknown key 'stifness'")],
)
def test_golden_errors(name, line, fragment):
    with pytest.raises(ConfigError) as exc:
        parse_config(DATA / name)
    assert exc.value.line == line
    assert fragment in str(exc.value)
    assert str(exc.value).startswith(f"{DATA / name}:{line}:")


@pytest.mark.parametrize(
    "text, line, fragment",
    [
        ("[spring]\nstiffness_N_per_mm = -1\n", 2, "stiffness_N_per_mm"),
        ("[spring]\nstiffness_N_per_mm = soft\n", 2, "invalid value"),
        ("stiffness_N_per_mm = 1\n", 1, "before any [section]"),
        ("[springs]\nk = 1\n", 1, "unknown section"),
        ("[spring]\nmass_kg = 1\nmass_kg = 2\n", 3, "duplicate key"),
        ("[spring]\nthis is not an entry\n", 2, "syntax error"),
        ("\n\n[protocol]\nphases = compress_to:30, unload, compress_to:10\n", 4, "nondecreasing"),
        ("[optimizer]\ndrum_radius_mm = 30, 10\n", 2, "lo <= hi"),
        ("[optimizer]\nobjective = fastest\n", 2, "objective"),
        ("[loss_model]\ninclude_cable_compliance = maybe\n", 2, "include_cable_compliance"),
        ("[spring]\nfree_length_mm = 50\n", 1, "max_deflection_mm"),
    ],
)
def test_located_errors(text, line, fragment):
    with pytest.raises(ConfigError) as exc:
        loads(text, "x.ini")
    assert exc.value.line == line
    assert fragment in str(exc.value)


def test_missing_file(tmp_path):
    with pytest.raises(ConfigError, match="cannot read"):
        parse_config(tmp_path / "nope.ini")


@settings(max_examples=100, deadline=None)
@given(
    k=st.floats(0.5, 100),
    slip=st.floats(0, 5),
    mu=st.floats(0.05, 1.0),
    targets=st.lists(st.floats(0, 80), min_size=1, max_size=4).map(sorted),
    compliance=st.booleans(),
    budget=st.integers(1, 5000),
    lo=st.floats(5, 15),
    width=st.floats(0, 10),
)
def test_round_trip_property(k, slip, mu, targets, compliance, budget, lo, width):
    phases = ", ".join(f"compress_to:{t!r}, unload" for t in targets) + ", release"
    text = (
        f"[spring]\nstiffness_N_per_mm = {k!r}\n"
        f"[clutch]\nfriction_coeff = {mu!r}\n"
        f"[loss_model]\nengagement_slip_mm = {slip!r}\ninclude_cable_compliance = {compliance}\n"
        f"[protocol]\nphases = {phases}\n"
        f"[optimizer]\npulley_radius_mm = {lo!r}, {lo + width!r}\ngrid_budget = {budget}\n"
    )
    cfg = loads(text)
    assert cfg.spring.stiffness_N_per_mm == k
    assert loads(dumps(cfg)) == cfg

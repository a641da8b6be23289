from math import e

import pytest

from h2corr.config import RunConfig, load_config, parse_config
from h2corr.errors import ConfigurationError
from h2corr.schedule import DESK_NUMBERS


def test_defaults_validate():
    cfg = RunConfig().validate()
    assert cfg.schedule().as_list() == list(DESK_NUMBERS)
    assert cfg.budget == pytest.approx(0.3 * (e - 1) / e)


def test_documented_keys():
    cfg = parse_config("""
        # comment
        rho0 = 0.25
        depth = 1
        tau1 = 0.1
        lambda = 50
        schedule.1.1 = 12
        schedule.1.2 = 80
        schedule.1.3 = 500
        grid.rho = 61
        grid.phi = 3920
        outdir = somewhere
        seed = 4
        formal.rho = 0.5, 0.6
        compare.K = 0.3, 0.7
    """)
    assert cfg.rho0 == 0.25 and cfg.depth == 1 and cfg.lam == 50
    assert cfg.schedule_mode == "explicit"
    assert cfg.schedule().as_list() == [12, 80, 500]
    assert cfg.grid_phi == 3920 and cfg.outdir == "somewhere" and cfg.seed == 4
    assert cfg.formal_rho == (0.5, 0.6) and cfg.compare_K == (0.3, 0.7)
    cfg.validate()


def test_text_round_trip():
    cfg = parse_config("depth = 1\nschedule.1.1 = 2\nschedule.1.2 = 10\nschedule.1.3 = 20\n")
    again = parse_config(cfg.as_text())
    # the written file carries the resolved budget, so it is a fixed point
    assert again.as_text() == cfg.as_text()
    assert again.budget == cfg.budget and again.schedule() == cfg.schedule()


@pytest.mark.parametrize("text", [
    "rho0 = 1.5", "rho0 = 0", "depth = -1", "tau1 = 0.5", "mode = fuzzy",
    "schedule = guess", "depth = 3", "conditions = LC7", "compare.K = 0.8, 0.2",
    "formal.samples = 4", "depth = 1\nschedule.1.1 = 3",
])
def test_invalid_values(text):
    with pytest.raises(ConfigurationError):
        parse_config(text).validate()


@pytest.mark.parametrize("text", ["colour = red", "depth = two", "depth = 1.5",
                                  "schedule.1.4 = 2", "compare.K = 0.3", "not a key value line"])
def test_malformed_text(text):
    with pytest.raises(ConfigurationError):
        parse_config(text)


def test_missing_file(tmp_path):
    with pytest.raises(ConfigurationError):
        load_config(tmp_path / "absent.cfg")


def test_overrides():
    cfg = RunConfig().with_overrides(outdir="x", depth=1, seed=9)
    assert (cfg.outdir, cfg.depth, cfg.seed) == ("x", 1, 9)

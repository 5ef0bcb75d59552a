import math

import pytest

from dacc import cli, scenario, sim
from dacc.adversary import SignPattern
from dacc.scenario import ConfigError, evaluate, parse_scenario

HEAD = """
[scenario]
graph = {data}/ieee33.graph
roster = {data}/ieee33.roster
"""
STAGE = """
[stage]
t_start = 0
t_end = 1
omega_l = 100*pi
p_l = 0.1852
"""


def _text(extra_head="", body=STAGE):
    data = scenario.bundled("")
    return HEAD.format(data=data) + extra_head + body


def test_evaluate():
    assert evaluate("3.1*pi") == pytest.approx(3.1 * math.pi)
    assert evaluate("-(2 + 3) / 4 ** 2") == pytest.approx(-5 / 16)
    for bad in ("__import__('os')", "pi.real", "[1]", "1 +", "e"):
        with pytest.raises(ConfigError):
            evaluate(bad)


def test_minimal_scenario_defaults():
    sf = parse_scenario(_text())
    assert sf.protocol == "dacc" and sf.sigma == "auto" and sf.eta == "auto"
    assert sf.safety.c_n == pytest.approx(math.pi)
    assert sf.safety.c_m == pytest.approx(3.1 * math.pi)
    assert sf.scenario.t_s == 0.01 and sf.scenario.total_steps == 100
    assert sf.summary is None and sf.seed == 0


def test_bundled_scenario_contents():
    sf = scenario.read_scenario(scenario.bundled("ieee33_dacc.scn"))
    assert (sf.sigma, sf.eta, sf.wmsr_f) == (0.9, 0.4, 2)
    assert (sf.summary.g, sf.summary.f, sf.summary.h, sf.summary.d_max) == (2, 3, 4, 5)
    s2, s3 = sf.scenario.stages[1:]
    assert s2.misbehavior.m1 == {"19", "20", "21"}
    assert s3.misbehavior.m2 == {"22", "23", "24", "28", "32", "L1", "L2"}
    assert {a.target for a in s3.attacks} == s3.misbehavior.misbehaving
    assert all(a.start_step == 400 for a in s3.attacks)
    signs = {a.target: a.attack.sign_pattern for a in s2.attacks}
    assert signs["L1"] is SignPattern.NEGATIVE and signs["19"] is SignPattern.POSITIVE
    assert sf.profiles["high"].components[0] == pytest.approx((41 * math.pi, 20.0))


def test_attack_window_and_profiles():
    body = STAGE.replace("t_end = 1", "t_end = 1\nm2 = 22\nattack = 22 : p @ 30 60") + ""
    text = _text("\n[profile p]\nchi0 = 10\ncomponents = (2*pi, 3)\nsign = alternating\nseed = 4\n", body)
    sf = parse_scenario(text)
    (a,) = sf.scenario.stages[0].attacks
    assert (a.target, a.start_step, a.end_step) == ("22", 30, 60)
    assert a.attack.seed == 4 and a.attack.sign_pattern is SignPattern.ALTERNATING


@pytest.mark.parametrize("head,body", [
    ("", "[stage]\nt_start = 0\n"),                                      # missing keys
    ("sigma = auto\n", STAGE),                                          # explicit auto without summary
    ("g = 2\n", STAGE),                                                 # partial summary
    ("protocol = magic\n", STAGE),                                      # unknown protocol
    ("", STAGE.replace("p_l", "m2 = 22\nattack = 22 : nope\np_l")),     # unknown profile
    ("", STAGE.replace("p_l", "attack = 22 p\np_l")),                   # attack without colon
    ("", STAGE + "[stage]\nt_start = 2\nt_end = 3\nomega_l = 1\np_l = 0\n"),  # gap
    ("", STAGE + "[weird]\n"),                                          # unknown section
    ("", STAGE.replace("t_end = 1", "t_end = 1\nt_end = 2")),           # repeated key
    ("", "stray line\n" + STAGE),                                       # not key = value
    ("", "\n[profile q]\nchi0 = 1\ncomponents = (1, 5)\n" + STAGE),     # chi0 too small
])
def test_malformed_scenarios(head, body):
    with pytest.raises(ConfigError):
        parse_scenario(_text(head, body))


def test_missing_files(tmp_path):
    with pytest.raises(ConfigError):
        parse_scenario("[scenario]\ngraph = nope.graph\nroster = nope\n" + STAGE, tmp_path)
    with pytest.raises(ConfigError):
        scenario.read_scenario(tmp_path / "absent.scn")


def test_implicit_auto_is_resolved_only_when_used():
    sf = parse_scenario(_text())
    assert cli.resolve_protocol(sf, "tc") == sim.Tc()
    with pytest.raises(ConfigError):
        cli.resolve_protocol(sf, "dacc")

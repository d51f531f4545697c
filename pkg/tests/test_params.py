import math

import pytest

from execrisk.params import ModelParams, ParameterError, build_params, derive, parse_penalty, phi0_from_p0

from conftest import GAMMA, KAPPA, desk_params


def test_alpha_and_risk_drift_desk_case():
    p = desk_params(0.1)
    d = derive(p)
    # 2 kappa / (2 * 1000 kappa - gamma), exact in rationals
    assert d.alpha == pytest.approx(0.001000050002500125006250313, rel=1e-15)
    assert d.risk_drift == pytest.approx(0.5 * GAMMA * 100.0**2, rel=1e-15)
    assert d.modified_drift == -d.risk_drift


def test_risk_drift_correlation_term():
    p = desk_params(0.3, correlation=0.5, exec_risk_price=2.0)
    assert derive(p).risk_drift == pytest.approx(0.5 * GAMMA * 300.0**2 + KAPPA * 0.5 * 2.0 * 300.0, rel=1e-15)


def test_fuel_limit_has_no_alpha():
    d = derive(desk_params(lam=math.inf))
    assert d.alpha is None


def test_phi0_from_p0():
    assert phi0_from_p0(0.3, 1e6, 1.0) == pytest.approx(300.0, rel=1e-15)
    assert phi0_from_p0(0.1, 4e6, 4.0) == pytest.approx(100.0, rel=1e-15)
    with pytest.raises(ParameterError):
        phi0_from_p0(-0.1, 1e6, 1.0)


@pytest.mark.parametrize(
    "field,value",
    [
        ("initial_shares", 0.0),
        ("horizon", -1.0),
        ("temporary_impact", 0.0),
        ("permanent_impact", -1e-7),
        ("correlation", 1.5),
        ("market_vol", -0.1),
        ("drift", math.inf),
        ("drift", math.nan),
        ("terminal_penalty", GAMMA / 2),
    ],
)
def test_rejects_out_of_range(field, value):
    with pytest.raises(ParameterError):
        desk_params(**{field: value})


def test_rejects_bool_and_strings():
    with pytest.raises(ParameterError):
        desk_params(drift=True)
    with pytest.raises(ParameterError):
        desk_params(drift="0")


def test_build_params_keys():
    raw = desk_params().to_dict()
    assert build_params(raw) == desk_params()
    with pytest.raises(ParameterError, match="unknown"):
        build_params({**raw, "sigma": 1.0})
    missing = dict(raw)
    del missing["horizon"]
    with pytest.raises(ParameterError, match="missing"):
        build_params(missing)


def test_penalty_parsing():
    assert parse_penalty("inf") == math.inf
    assert parse_penalty(" Infinity ") == math.inf
    assert parse_penalty("2.5e-3") == 2.5e-3
    with pytest.raises(ParameterError):
        parse_penalty("lots")


def test_to_dict_roundtrip_with_infinite_penalty():
    p = desk_params(lam=math.inf)
    d = p.to_dict()
    assert d["terminal_penalty"] == "inf"
    assert build_params(d) == p
    assert isinstance(p.replace(drift=1.0), ModelParams)

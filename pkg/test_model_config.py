import json

from pytest import approx, mark, raises

from errors import ConfigParseError, NotStrictSupermartingale, ScheduleNotDecreasing
from filtration import build_tree
from model_config import build_model, load_config, parse_config, parse_process

GEOMETRIC = {"kind": "geometric", "initial": 1, "ratio": 0.5}


def _config(**overrides):
    document = {
        "tree": {"branching": [2, 2]},
        "kernel": {"type": "explicit", "process": {"nodes": [[2.0], [1.1, 0.9], [0.61, 0.49, 0.49, 0.41]]}},
    }
    document.update(overrides)
    return json.dumps(document)


def test_invalid_json_reports_position():
    with raises(ConfigParseError) as info:
        parse_config('{\n  "kernel": {"type": "explicit",\n}')
    assert info.value.line == 3
    assert info.value.column is not None


@mark.parametrize("document, field", (
    ('[]', ""),
    ('{"tree": {"branching": [2]}}', "kernel"),
    (_config(colour="blue"), "colour"),
    (_config(kernel={"type": "spline"}), "kernel.type"),
    (_config(kernel={"type": "rational", "beta": [1, 0.5], "martingale": {}}), "kernel.alpha"),
    (_config(kernel={"type": "explicit"}), "kernel.process"),
    (_config(tree=None), "tree"),
    (_config(tree={"depth": 2}), "tree"),
    (_config(assets=[{"dividends": "zero"}]), "assets[0].id"),
    (_config(assets=[{"id": "a"}]), "assets[0].dividends"),
    (_config(assets=[{"id": "a", "dividends": "zero"}], fx=[{"id": "a", "dividends": "zero"}]), "fx[0].id"),
    (_config(tolerance=-1), "tolerance"),
    (_config(tolerance="tight"), "tolerance"),
))
def test_schema_errors_name_the_field(document, field):
    with raises(ConfigParseError) as info:
        parse_config(document)
    assert info.value.field == field


def test_load_r1_configuration(r1_config_path):
    config = load_config(r1_config_path)
    assert config.kernel["type"] == "rational"
    assert [a["id"] for a in config.assets] == ["frn", "money-market", "zero"]
    assert config.outputs == {"from": 0, "asset": "frn"}
    assert config.tolerance is None


def test_build_r1_model(r1_config, write_config):
    model = build_model(load_config(write_config(r1_config)))
    assert model.kernel.horizon == 2
    assert model.kernel.at(2) == approx([0.61, 0.49, 0.49, 0.41])
    assert model.rational is not None
    assert model.increasing is None
    assert model.tree.times == (0.0, 1.0, 2.0)
    assert sorted(model.assets) == ["frn", "money-market", "zero"]
    assert model.assets["money-market"].value is model.account.balance
    assert model.assets["frn"].value.at(0) == approx([1.0])
    assert model.assets["frn"].redemption == 1.0
    assert model.assets["zero"].dividends is None
    leg = model.fx["foreign"]
    assert (leg.dividends.lo, leg.dividends.hi) == (1, 2)
    assert leg.redemption == 1.0


def test_build_chain_model(chain_config_path):
    model = build_model(load_config(chain_config_path))
    assert [model.kernel.at(i)[0] for i in range(3)] == [1.0, 0.5, 0.25]
    coupon = model.assets["coupon"]
    assert coupon.redemption == 0.0
    assert coupon.dividends.at(2).tolist() == [1.0]


def test_branching_driver_builds_its_own_tree():
    config = parse_config(json.dumps({"kernel": {
        "type": "rational", "alpha": GEOMETRIC, "beta": GEOMETRIC,
        "martingale": {"kind": "branching-process", "offspring": {"1": "1/2", "2": "1/2"}, "initial": 1, "depth": 3},
    }}))
    model = build_model(config)
    assert model.tree.depth == 3
    assert model.tree.size(1) == 2
    assert model.kernel.value(0, 0) == approx(2.0)


def test_from_increasing_configuration(write_config):
    path = write_config({
        "tree": {"branching": [2, 2]},
        "kernel": {"type": "from-increasing", "process": {"nodes": [[0], [1, 2], [2, 3, 2.5, 4]]}},
        "fx": [{"id": "flat", "dividends": "zero", "redemption": 2}],
        "tolerance": 1e-9,
    })
    model = build_model(load_config(path))
    assert model.kernel.horizon == 1
    assert model.kernel.at(1) == approx([1.5, 1.25])
    G, asset = model.increasing
    assert G.name == "G"
    assert asset.rate.at(1) == approx([1 / 1.5, 2 / 1.25])
    assert model.kernel.tolerance == 1e-9
    leg = model.fx["flat"]
    assert leg.dividends.max() == 0.0
    assert (leg.dividends.lo, leg.dividends.hi) == (1, 1)


def test_kernel_rejections_pass_through(write_config):
    constant = {"tree": {"branching": [2]}, "kernel": {"type": "explicit", "process": {"deterministic": [1, 1]}}}
    with raises(NotStrictSupermartingale):
        build_model(load_config(write_config(constant)))
    flat_schedule = {"tree": {"branching": [2, 2]}, "kernel": {
        "type": "rational", "alpha": [1, 1, 0.5], "beta": GEOMETRIC,
        "martingale": {"kind": "constant", "value": 1}}}
    with raises(ScheduleNotDecreasing):
        build_model(load_config(write_config(flat_schedule)))


@mark.parametrize("kernel, field", (
    ({"type": "rational", "alpha": GEOMETRIC, "beta": GEOMETRIC,
      "martingale": {"kind": "multiplicative-binomial", "up": 1.2, "down": 0.9, "probability": 0.5}},
     "kernel.martingale"),
    ({"type": "rational", "alpha": GEOMETRIC, "beta": GEOMETRIC, "martingale": {"kind": "lognormal"}},
     "kernel.martingale"),
    ({"type": "rational", "alpha": {"kind": "explicit", "values": [1, 0.5]}, "beta": GEOMETRIC,
      "martingale": {"kind": "constant", "value": 1}}, "kernel.alpha"),
    ({"type": "explicit", "process": {"values": {"0": {"root": 2}, "1": {"n1_0": 1}}}}, "kernel.process"),
    ({"type": "explicit", "process": {"start": 0}}, "kernel.process"),
))
def test_build_errors_name_the_field(write_config, kernel, field):
    path = write_config({"tree": {"branching": [2, 2]}, "kernel": kernel})
    with raises(ConfigParseError) as info:
        build_model(load_config(path))
    assert info.value.field == field


def test_bad_asset_process_names_the_field(r1_config, write_config):
    r1_config["assets"] = [{"id": "bad", "dividends": {"deterministic": [1, 1, 1], "start": 1}}]
    with raises(ConfigParseError) as info:
        build_model(load_config(write_config(r1_config)))
    assert info.value.field == "assets[0].dividends"


@mark.parametrize("value", ({"deterministic": [1, 1], "start": 1}, {"deterministic": [1, 1]}))
def test_asset_value_must_cover_the_horizon(r1_config, write_config, value):
    r1_config["assets"] = [{"id": "short", "dividends": "zero", "value": value}]
    with raises(ConfigParseError) as info:
        build_model(load_config(write_config(r1_config)))
    assert info.value.field == "assets[0].value"


def test_parse_process_forms():
    tree = build_tree([2])
    assert parse_process(tree, {"deterministic": [1, 0.5]}, "X").at(1).tolist() == [0.5, 0.5]
    assert parse_process(tree, {"start": 1, "nodes": [[3, 4]]}, "X").at(1).tolist() == [3.0, 4.0]
    by_id = parse_process(tree, {"values": {"1": {"n1_0": 5, "n1_1": 6}}}, "X")
    assert (by_id.lo, by_id.hi) == (1, 1)
    with raises(ConfigParseError):
        parse_process(tree, [1, 2], "X")

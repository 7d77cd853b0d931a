import json
import math
from pathlib import Path

import numpy as np
import pytest

import skilladapt

ROOT = Path(__file__).resolve().parents[2]
DEMOS = ROOT / "data" / "demos"


def line_demo(n=200, x=0.45):
    t = np.linspace(0.0, 1.0, n)
    rows = np.zeros((n, 8))
    rows[:, 0] = t
    rows[:, 1] = x
    rows[:, 2] = -0.2 + 0.4 * t
    rows[:, 3] = 0.3 + 0.05 * np.sin(np.pi * t)
    rows[:, 4] = 1.0
    return rows


@pytest.fixture(scope="module")
def model():
    return skilladapt.fit_model([line_demo(x=0.45), line_demo(x=0.452), line_demo(x=0.454)],
                                components=6, samples=100)


def test_via_point_round_trip(model):
    before = model.sample(200)
    target = model.predict_mean(0.3)
    target[1] += 0.05
    vid = model.add_via_point(0.3, target)
    assert np.linalg.norm(model.predict_mean(0.3)[:3] - target[:3]) < 1e-3
    model.remove_via_point(vid)
    assert np.max(np.abs(model.sample(200) - before)) < 1e-10


def test_model_json_round_trip(model):
    copy = skilladapt.KmpModel.from_json(model.to_json())
    assert np.allclose(copy.predict_mean(0.7), model.predict_mean(0.7), atol=1e-12)


def test_retiming():
    slow = skilladapt.TimeProfile(10.0).time_scale(50, 0.2, 0.6, "slow")
    assert slow.window_duration(0.2, 0.6) == pytest.approx(8.0, abs=1e-9)
    assert slow.duration == pytest.approx(14.0)


def test_errors_carry_codes(model):
    with pytest.raises(skilladapt.Error) as info:
        model.remove_via_point(999)
    assert info.value.code == "UnknownId"
    with pytest.raises(skilladapt.Error) as info:
        skilladapt.TimeProfile().time_scale(0, 0.2, 0.6, "slow")
    assert info.value.code == "InvalidRange"


def test_tool_validation():
    ok, reason = skilladapt.validate_tool_call("SetForce", {"force": 50})
    assert not ok and "[5, 30]" in reason
    assert skilladapt.validate_tool_call("SetForce", {"force": 30}) == (True, "")
    names = {s["function"]["name"] for s in skilladapt.tool_schemas()}
    assert len(names) == 8 and "AddRepulsion" in names


def test_mock_backend():
    reply = skilladapt.mock_respond({"messages": [{"role": "user", "content": "slow down between 20% and 60% by half"}]})
    call = reply["choices"][0]["message"]["tool_calls"][0]["function"]
    assert call["name"] == "SlowDown"
    assert json.loads(call["arguments"]) == {"percentage": 50.0, "t_start": 0.2, "t_end": 0.6}


def test_energy_tank_decay():
    bank = skilladapt.EnergyTankBank()
    bank.set_energy(0, 0.4)
    steps = 0
    zero = np.zeros(6)
    while bank.energy(0) > 0.0:
        bank.step(zero, zero, zero, 1.0 / 400.0)
        steps += 1
    assert abs(steps - 4000) <= 1


def test_ergodic_pause_preserves_state():
    ctl = skilladapt.ErgodicController(grid=32)
    ctl.start()
    for _ in range(200):
        ctl.step(0.02)
    c, t = ctl.coverage.copy(), ctl.time
    ctl.set_exec_state("pause")
    ctl.set_exec_state("resume")
    assert np.array_equal(ctl.coverage, c) and ctl.time == t
    ctl.set_stiffness(1500)
    assert ctl.setpoints["stiffness_normal"] == 800.0


def test_engine_services():
    engine = skilladapt.Engine({"demo_dir": str(DEMOS), "gmm_components": 6, "samples": 100})
    assert "sweep" in json.dumps(engine.call("list_demonstrations"))
    model = engine.call("get_model", {"name": "sweep"})
    assert len(model["trajectory"]) == 100
    added = engine.call("add_via_point", {"index": 40, "pos": model["trajectory"][40]["pos"]})
    assert "id" in added
    with pytest.raises(skilladapt.Error) as info:
        engine.call("transcribe_speech", {"audio": ""})
    assert info.value.code == "NotSupported"


def test_envelope_fixture_byte_exact():
    text = (ROOT / "tests" / "fixtures" / "protocol" / "service_request.json").read_text().rstrip("\n")
    assert skilladapt.envelope_roundtrip(text) == text


def test_scenario(tmp_path):
    code, message = skilladapt.run_scenario(ROOT / "scenarios" / "set_force_out_of_bounds.json", out_dir=tmp_path)
    assert code == 1 and "[5, 30]" in message

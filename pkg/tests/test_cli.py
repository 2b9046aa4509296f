import json

import pytest
import yaml

from topolab.__main__ import parse_descriptor, parse_seq, parse_sets, run
from topolab.errors import UsageError
from topolab.exact_core import FinSeq, TailSeq, unit
from topolab.finite_lab import cyclic_group, direct_product
from topolab.sequence_spaces import SpaceKind, SubgroupDescriptor

ROUND_TRIPS = [
    ["seq", "add", "0:1", "1:1/2"],
    ["seq", "norm", "2:1/6", "--norm", "l1"],
    ["seq", "member", "1:1/2", "--lattice", "R"],
    ["seq", "equiv", "0:1", "1:1", "--lattice", "S"],
    ["seq", "space-member", "0,0,0,0|1/4", "--space", "C_CAP_R"],
    ["seq", "dist", "", "1:1/2", "--space", "GAMMA1"],
    ["seq", "subgroup-member", "1:1/2", "--subgroup", "COORD_INT:1", "--modulo", "S"],
    ["seq", "coset-ball", "0:1,5:-1", "--radius", "1/100"],
    ["witness", "no-smog-chain", "--radius", "1/10"],
    ["witness", "q-ta", "--q", "5/3", "--eps", "1/10"],
    ["witness", "unbounded-multiple", "--a", "2:1/6", "--space", "GAMMA0", "--bound", "100"],
    ["non0", "premises", "--instance", "c_cap_r"],
    ["non0", "construct", "--depth", "3"],
    ["finite", "report", "--cyclic", "4", "--base", "0,2;0"],
    ["finite", "embed", "--cyclic", "6", "--base", "0,3;0,2,4"],
    ["finite", "metric", "--cyclic", "4", "--chain", "0,1,2,3;0,2;0", "1", "3"],
    ["finite", "extend", "--cyclic", "4", "--normal", "0,2", "--neighborhood", "0,2"],
    ["finite", "factorize", "--cyclic", "5,7", "--indices", "0,1", "--neighborhood", "0=0,1,4",
     "--neighborhood", "1=0,1,6", "--element", "3,2"],
    ["abelian", "prufer", "--orders", "6,4,9"],
    ["abelian", "quotient", "--cyclic", "4", "--base", "0,2;0"],
    ["abelian", "decompose", "--cyclic", "12"],
]


def _run_json(capsys, argv):
    code = run(argv)
    return code, json.loads(capsys.readouterr().out)


def _emit(tmp_path, argv, name="cert.json"):
    path = tmp_path / name
    assert run(argv + ["-o", str(path)]) == 0
    return json.loads(path.read_text(encoding="utf-8"))


def test_parse_seq():
    assert parse_seq("1:1/2,3:-1") == unit(1, "1/2") + unit(3, -1)
    assert parse_seq("") == FinSeq()
    assert parse_seq("0,1/2|1/3") == TailSeq((0, "1/2"), "1/3")
    assert parse_seq('{"support": {"1": "1/2"}}') == unit(1, "1/2")
    with pytest.raises(UsageError):
        parse_seq("1=1/2")


def test_parse_helpers():
    assert parse_sets("0,2;0") == [[0, 2], [0]]
    assert parse_descriptor("COORD_INT:1") == SubgroupDescriptor.coord_int(1)
    assert parse_descriptor("ball_generated:GAMMA0:1/10") == SubgroupDescriptor.ball_generated(
        SpaceKind.GAMMA0, "1/10")
    with pytest.raises(UsageError):
        parse_descriptor("COORD_ZERO:x")
    with pytest.raises(UsageError):
        parse_sets("0,a")


def test_seq_examples(capsys):
    code, env = _run_json(capsys, ["seq", "add", "0:1", "0:-1"])
    assert code == 0
    assert env["payload"] == {"sum": {"support": {}}}
    assert env["verified"] is True and env["schemaVersion"] == "1"

    code, env = _run_json(capsys, ["seq", "norm", "10:1/11"])
    assert env["payload"] == {"value": "1/11"}

    code, env = _run_json(capsys, ["seq", "coset-ball", "1:1/2", "--radius", "1/4"])
    assert env["payload"]["member"] is False


def test_witness_example(capsys):
    code, env = _run_json(capsys, ["witness", "no-smog-chain", "--radius", "1/10"])
    assert code == 0
    assert env["command"] == "witness"
    assert env["payload"]["witness"]["n"] == 10
    assert all(ok for _, ok in env["payload"]["checks"])


def test_witness_needs_its_inputs(capsys):
    assert run(["witness", "q-ta", "--q", "1"]) == 1
    assert "--eps" in capsys.readouterr().err


def test_non0_example(capsys):
    code, env = _run_json(capsys, ["non0", "construct", "--instance", "gamma1", "--radius", "1",
                                   "--depth", "2"])
    assert code == 0
    payload = env["payload"]
    assert payload["nprime"] == [1, 6] and payload["n"] == [2, 6]
    assert payload["nu"] == ["0/1", "5/6", "41/42"]


def test_non0_cap_without_partial_is_a_precondition_failure(capsys):
    assert run(["non0", "construct", "--instance", "c_cap_r", "--depth", "6"]) == 2
    assert "Error:" in capsys.readouterr().err


def test_non0_partial_round_trip(tmp_path, capsys):
    env = _emit(tmp_path, ["non0", "construct", "--instance", "c_cap_r", "--depth", "6", "--partial"])
    assert env["payload"]["depth"] < 6
    assert run(["non0", "verify", str(tmp_path / "cert.json")]) == 0
    assert json.loads(capsys.readouterr().out)["ok"] is True


def test_non0_deep_round_trip(tmp_path, capsys):
    # support keys at depth 13 run past a thousand digits
    env = _emit(tmp_path, ["non0", "construct", "--depth", "13"])
    assert max(len(str(n)) for n in env["payload"]["nprime"]) > 1024
    capsys.readouterr()
    assert run(["non0", "verify", str(tmp_path / "cert.json")]) == 0
    assert json.loads(capsys.readouterr().out)["ok"] is True


def test_finite_examples(capsys):
    code, env = _run_json(capsys, ["finite", "report", "--cyclic", "4", "--base", "0,2;0"])
    assert env["payload"]["tna"] and env["payload"]["smog"] and not env["payload"]["ta"]

    code, env = _run_json(capsys, ["finite", "metric", "--cyclic", "4", "--chain", "0,1,2,3;0,2;0",
                                   "1", "3"])
    assert env["payload"] == {"distance": "1/2"}

    code, env = _run_json(capsys, ["finite", "factorize", "--cyclic", "5,7", "--indices", "0,1",
                                   "--neighborhood", "0=0,1,4", "--neighborhood", "1=0,1,6",
                                   "--element", "3,2"])
    assert env["payload"] == {"gPrime": [0, 0], "h": [[1, 1], [1, 1], [1, 0]]}


def test_group_file(write_json, capsys):
    klein = direct_product(cyclic_group(2), cyclic_group(2))
    path = write_json(klein.to_json(), "klein.json")
    code, env = _run_json(capsys, ["finite", "extend", "--group", path, "--normal", "0,2",
                                   "--neighborhood", "0,2"])
    assert code == 0
    assert env["payload"]["H"] == [0, 2]

    path = write_json({"degree": 3, "generators": [[1, 0, 2], [1, 2, 0]]}, "s3.json")
    code, env = _run_json(capsys, ["finite", "embed", "--group", path, "--base", "0"])
    assert code == 0 and env["payload"]["codomainDegree"] == 6


def test_rejected_embeddings_exit_2(capsys):
    code, env = _run_json(capsys, ["finite", "embed", "--cyclic", "4", "--base", "0,2"])
    assert code == 2
    assert env["payload"]["kernel"] == [0, 2]
    assert env["verified"] is False
    assert run(["abelian", "quotient", "--cyclic", "4", "--base", "0,2"]) == 2


def test_precondition_failures_exit_2(capsys):
    assert run(["finite", "embed", "--cyclic", "4", "--base", "0,1,3"]) == 2
    assert run(["abelian", "decompose", "--cyclic", "300"]) == 2
    assert run(["seq", "dist", "", "1:1/3", "--space", "GAMMA0"]) == 2
    err = capsys.readouterr().err
    assert err.count("Error:") == 3


@pytest.mark.parametrize("argv", [
    ["finite", "factorize", "--cyclic", "5,7", "--indices", "0,1", "--neighborhood", "0=0,1,4",
     "--element", "3,2"],
    ["finite", "factorize", "--cyclic", "5,7", "--indices", "2", "--neighborhood", "2=0,1,4",
     "--element", "3,2"],
    ["finite", "factorize", "--cyclic", "5,7", "--indices", "0", "--neighborhood", "0=0,1,9",
     "--element", "3,2"],
    ["finite", "factorize", "--cyclic", "5,7", "--indices", "0", "--neighborhood", "0=0,1,4",
     "--element", "3,8"],
    ["finite", "metric", "--cyclic", "4", "--chain", "0,1,2,3;0,2;0", "7", "0"],
    ["finite", "metric", "--cyclic", "4", "--chain", "0,1,2,3;0,6;0", "1", "3"],
    ["finite", "extend", "--cyclic", "4", "--normal", "0,2", "--neighborhood", "0,5"],
], ids=["missing-U", "index-out-of-range", "U-outside-group", "element-outside-group",
        "metric-argument", "chain-member", "extend-U"])
def test_out_of_range_finite_inputs_exit_2(argv, capsys):
    assert run(argv) == 2
    err = capsys.readouterr().err
    assert err.startswith("Error:") and "Traceback" not in err


def test_malformed_neighborhood_exits_1(capsys):
    assert run(["finite", "factorize", "--cyclic", "5,7", "--indices", "0", "--neighborhood", "x=0,1,4",
                "--element", "3,2"]) == 1
    assert "index=elements" in capsys.readouterr().err


def test_bad_group_file_exit_1(tmp_path, capsys):
    path = tmp_path / "broken.json"
    path.write_text("{not json", encoding="utf-8")
    assert run(["finite", "report", "--group", str(path), "--base", "0"]) == 1
    assert run(["finite", "report", "--group", str(tmp_path / "missing.json"), "--base", "0"]) == 1


def test_unknown_flag_exits_1():
    with pytest.raises(SystemExit) as e:
        run(["seq", "add", "0:1", "0:1", "--bogus"])
    assert e.value.code == 1


def test_bad_environment_exits_1(monkeypatch, capsys):
    monkeypatch.setenv("TOPOLAB_INDEX_CAP", "many")
    assert run(["non0", "construct", "--depth", "1"]) == 1
    assert "TOPOLAB_INDEX_CAP" in capsys.readouterr().err


@pytest.mark.parametrize("argv", ROUND_TRIPS, ids=lambda argv: " ".join(argv[:2]))
def test_round_trip(argv, tmp_path, capsys):
    _emit(tmp_path, argv)
    capsys.readouterr()
    assert run(["verify", str(tmp_path / "cert.json")]) == 0
    result = json.loads(capsys.readouterr().out)
    assert result["ok"] is True and result["failure"] is None


def test_yaml_round_trip(tmp_path, capsys):
    path = tmp_path / "cert.yaml"
    assert run(["abelian", "prufer", "--orders", "6,4,9", "--format", "yaml", "-o", str(path)]) == 0
    assert yaml.safe_load(path.read_text(encoding="utf-8"))["command"] == "abelian prufer"
    assert run(["verify", str(path)]) == 0


def _tamper(env, path, value):
    """Set the field at ``path`` (a list of keys and indices) to ``value``."""
    target = env
    for key in path[:-1]:
        target = target[key]
    target[path[-1]] = value
    return env


MUTATIONS = [
    (["seq", "norm", "2:1/6"], ["payload", "value"], "1/7", "payload recomputation"),
    (["seq", "member", "1:1/2", "--lattice", "R"], ["payload", "member"], False,
     "payload recomputation"),
    (["seq", "add", "0:1", "1:1/2"], ["inputs", "b"], {"support": {"1": "1/3"}},
     "payload recomputation"),
    (["seq", "norm", "2:1/6"], ["verified"], False, "verified flag"),
    (["finite", "report", "--cyclic", "4", "--base", "0,2;0"], ["payload", "smog"], False,
     "payload recomputation"),
    (["finite", "embed", "--cyclic", "6", "--base", "0,3;0,2,4"], ["payload", "injectiveOk"], False,
     "payload recomputation"),
    (["finite", "extend", "--cyclic", "4", "--normal", "0,2", "--neighborhood", "0,2"],
     ["payload", "H"], [0], "payload recomputation"),
    (["abelian", "prufer", "--orders", "6"], ["payload", "generators", 0, 0, "value"], "1/4",
     "payload recomputation"),
    (["abelian", "decompose", "--cyclic", "12"], ["payload", "orders"], [6, 2],
     "payload recomputation"),
    (["witness", "no-smog-chain", "--radius", "1/10"], ["payload", "witness", "n"], 11, None),
    (["witness", "q-ta", "--q", "5/3", "--eps", "1/10"], ["inputs", "inputs", "eps"], "1/20",
     "witness inputs"),
    (["non0", "construct", "--depth", "3"], ["payload", "nu", 1], "4/6", "nu recomputation"),
    (["non0", "construct", "--depth", "3"], ["payload", "nprime", 1], 5, "membership at n′"),
    (["non0", "construct", "--depth", "3"], ["inputs", "radius"], "2/1", "instance"),
    (["non0", "construct", "--depth", "3"], ["inputs", "premises", "trials"], 199, "premises"),
    (["non0", "construct", "--depth", "3"], ["payload", "depth"], 4, "replay"),
]


@pytest.mark.parametrize("argv, path, value, failure", MUTATIONS,
                         ids=lambda x: ".".join(map(str, x)) if isinstance(x, list) else None)
def test_single_field_tamper_is_rejected(argv, path, value, failure, tmp_path, write_json, capsys):
    env = _emit(tmp_path, argv)
    capsys.readouterr()
    tampered = write_json(_tamper(env, path, value), "tampered.json")
    assert run(["verify", tampered]) == 3
    result = json.loads(capsys.readouterr().out)
    assert result["ok"] is False
    if failure is not None:
        assert result["failure"] == failure


def test_schema_version_edit_exits_1(tmp_path, write_json, capsys):
    env = _emit(tmp_path, ["seq", "norm", "2:1/6"])
    env["schemaVersion"] = "2"
    assert run(["verify", write_json(env, "v2.json")]) == 1
    assert "schemaVersion" in capsys.readouterr().err

    del env["verified"]
    env["schemaVersion"] = "1"
    assert run(["verify", write_json(env, "short.json")]) == 1


def test_non0_verify_requires_a_subsum_certificate(tmp_path):
    _emit(tmp_path, ["seq", "norm", "2:1/6"])
    assert run(["non0", "verify", str(tmp_path / "cert.json")]) == 1


def test_non0_verify_tolerance(tmp_path, capsys):
    _emit(tmp_path, ["non0", "construct", "--depth", "2"])
    path = str(tmp_path / "cert.json")
    assert run(["non0", "verify", path, "--tolerance", "1/6"]) == 0
    capsys.readouterr()
    assert run(["non0", "verify", path, "--tolerance", "1/7"]) == 3
    assert json.loads(capsys.readouterr().out)["failure"] == "cauchy gap"

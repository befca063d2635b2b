import json

import numpy as np
import pytest

from lindstedt import numerics as nx
from lindstedt.cli import main, parse_config, read_dump, validate_config, write_dump
from lindstedt.errors import ConfigError, ExactResonance


def maximal_config(**kw):
    cfg = {"schema_version": 1, "problem": "maximal", "dimension": 1,
           "potential": [{"mode": [1], "cos": "-1"}], "frequency": {"kind": "golden"},
           "gamma": "0.1", "order": 10, "norm": {"rho": "1", "r": "1"},
           "residual_orders": [2], "fit_window": [3, 10]}
    cfg.update(kw)
    return cfg


def lower_config(**kw):
    cfg = {"schema_version": 1, "problem": "lower-conservative", "dimension": 2,
           "potential": [{"mode": [1, 0], "cos": "1"}, {"mode": [0, 1], "cos": "1"}],
           "frequency": {"kind": "golden"}, "gamma": "0", "order": 6,
           "topology": {"k": [1, 0]}, "beta0_index": 1}
    cfg.update(kw)
    return cfg


def write(tmp_path, cfg, name="run.json"):
    path = tmp_path / name
    path.write_text(json.dumps(cfg))
    return str(path)


def test_minimal_maximal_config_parses(tmp_path):
    cfg = parse_config(write(tmp_path, maximal_config()))
    assert cfg.problem == "maximal" and cfg.order == 10 and cfg.gamma == "0.1"


def test_non_orthogonal_topology(tmp_path):
    bad = lower_config(topology={"k": [1, 0], "k_perp": [1, 1]})
    with pytest.raises(ConfigError) as info:
        parse_config(write(tmp_path, bad))
    assert any("orthogonal" in v for v in info.value.violations)


def test_rational_frequency():
    with pytest.raises(ExactResonance):
        validate_config(maximal_config(frequency={"kind": "rational", "value": "1/2"}))


def test_all_violations_collected():
    bad = maximal_config(order=0, gamma="abc", eps=["1e-3", "1e-2"], extra=1)
    with pytest.raises(ConfigError) as info:
        validate_config(bad)
    text = " ".join(info.value.violations)
    for field in ("order", "gamma", "eps", "extra"):
        assert field in text


def test_gamma_sign_rules():
    with pytest.raises(ConfigError):
        validate_config(lower_config(gamma="0.1"))
    with pytest.raises(ConfigError):
        validate_config(lower_config(problem="lower-dissipative"))


def test_bad_json(tmp_path):
    path = tmp_path / "x.json"
    path.write_text("{not json")
    assert main(["expand-max", "--config", str(path)]) == 2


def test_worked_maximal_run(tmp_path, capsys):
    cfg = write(tmp_path, maximal_config())
    for verb in ("expand-max", "residual", "gevrey-fit", "check-bounds", "profile-frequency"):
        assert main([verb, "--config", cfg, "--out", str(tmp_path / "out")]) == 0
    names = {p.name for p in (tmp_path / "out").iterdir()}
    assert names == {"coefficients.jsonl", "norms.csv", "residuals.csv", "fit.csv",
                     "bounds.csv", "profile.csv"}
    out = capsys.readouterr().out
    assert "degree law" in out and "Gevrey fit" in out


def test_lower_run(tmp_path):
    cfg = write(tmp_path, lower_config())
    assert main(["expand-lower", "--config", cfg, "--out", str(tmp_path / "o")]) == 0
    assert main(["expand-max", "--config", cfg, "--out", str(tmp_path / "o")]) == 2


def test_degenerate_lower_exit_code(tmp_path):
    cfg = write(tmp_path, lower_config(potential=[{"mode": [1, 0], "cos": "1"}]))
    assert main(["expand-lower", "--config", cfg, "--out", str(tmp_path / "o")]) == 4


def test_resonance_exit_code(tmp_path):
    cfg = write(tmp_path, maximal_config(frequency={"kind": "rational", "value": "1/2"}))
    assert main(["expand-max", "--config", cfg, "--out", str(tmp_path / "o")]) == 3
    cfg = write(tmp_path, maximal_config(frequency={"kind": "explicit",
                                                     "values": ["3.141592653589793"]}))
    assert main(["expand-max", "--config", cfg, "--out", str(tmp_path / "o")]) == 3


def test_overflow_exit_code(tmp_path):
    cfg = write(tmp_path, maximal_config(norm={"rho": "400", "r": "0"}))
    assert main(["expand-max", "--config", cfg, "--out", str(tmp_path / "o")]) == 5


def test_threads_flag(tmp_path):
    cfg = write(tmp_path, maximal_config())
    assert main(["expand-max", "--config", cfg, "--out", str(tmp_path / "o"),
                 "--threads", "4"]) == 0
    assert main(["expand-max", "--config", cfg, "--threads", "0"]) == 2


@pytest.mark.parametrize("bits", [None, "128"])
def test_reruns_are_byte_identical(tmp_path, bits):
    cfg = write(tmp_path, maximal_config())
    extra = [] if bits is None else ["--precision-bits", bits]
    outputs = []
    for d in ("a", "b"):
        assert main(["residual", "--config", cfg, "--out", str(tmp_path / d)] + extra) == 0
        outputs.append({p.name: p.read_bytes() for p in (tmp_path / d).iterdir()})
    assert outputs[0] == outputs[1]


@pytest.mark.parametrize("bits", [None, "160"])
@pytest.mark.parametrize("config", [maximal_config, lower_config])
def test_dump_round_trip(tmp_path, bits, config):
    cfg = write(tmp_path, config())
    extra = [] if bits is None else ["--precision-bits", bits]
    verb = "expand-max" if config is maximal_config else "expand-lower"
    assert main([verb, "--config", cfg, "--out", str(tmp_path / "o")] + extra) == 0
    src = tmp_path / "o" / "coefficients.jsonl"
    dump = read_dump(src)
    with nx.working_precision(dump.header["precision_bits"]):
        write_dump(dump, tmp_path / "again.jsonl")
    assert (tmp_path / "again.jsonl").read_bytes() == src.read_bytes()


def test_dump_records_sorted_and_complete(tmp_path):
    cfg = write(tmp_path, lower_config())
    main(["expand-lower", "--config", cfg, "--out", str(tmp_path / "o")])
    recs = [json.loads(x) for x in (tmp_path / "o" / "coefficients.jsonl").read_text().splitlines()]
    assert recs[0]["type"] == "header"
    coefs = [(r["n"], r["ell"]) for r in recs if r["type"] == "coef"]
    assert coefs == sorted(coefs)
    assert sum(r["type"] == "mu" for r in recs) == 7
    assert sum(r["type"] == "beta" for r in recs) == 7
    beta0 = [r for r in recs if r["type"] == "beta" and r["n"] == 0][0]
    assert float(beta0["value"]) == pytest.approx(np.pi)

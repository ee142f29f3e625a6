import json
import math

import numpy as np
import pytest

from carleman_lab import cli
from carleman_lab.errors import ParseError, ValidationError

DISK = """
domain: {kind: disk, radius: 1.0}
field: {kind: constant, vector: [1.0, 0.0]}
weight: {r: 2.0}
solve: {h: 0.08}
verify: {T: %s}
"""


def run(tmp_path, sub, text, *flags):
    cfg = tmp_path / "c.yaml"
    cfg.write_text(text)
    out = tmp_path / sub
    code = cli.main([sub, "--config", str(cfg), "--out", str(out), *flags])
    summary = json.loads((out / "summary.json").read_text())
    return code, out, summary


def test_parse_minimal_defaults():
    cfg = cli.parse_config("domain: {kind: disk}\nfield: {kind: constant, vector: [1, 0]}\n")
    assert cfg.sstar == 0.8
    assert cfg.get("weight", "r") is None  # resolved to the diameter when building
    assert cfg.get("verify", "C0", 1.0) == 1.0


def test_parse_flat_dotted_keys():
    cfg = cli.parse_config("domain.kind: disk\ndomain.radius: 2\npartition.sstar: 0.9\n")
    assert cfg.blocks["domain"] == {"kind": "disk", "radius": 2}
    assert cfg.sstar == 0.9


def test_aperture_validation_message():
    with pytest.raises(ValidationError, match="aperture must exceed 1/√2 ≈ 0.7071"):
        cli.parse_config("partition: {sstar: 0.5}\n")


def test_unknown_key_reports_line():
    with pytest.raises(ParseError) as info:
        cli.parse_config("domain:\n  kind: disk\n  radius: 1\n  colour: red\n")
    assert info.value.line == 4 and info.value.key == "domain.colour"
    with pytest.raises(ParseError):
        cli.parse_config("extras: {a: 1}\n")


def test_malformed_yaml():
    with pytest.raises(ParseError) as info:
        cli.parse_config("domain: {kind: disk\nfield: [\n")
    assert info.value.line is not None


def test_missing_block_for_solve():
    cfg = cli.parse_config("domain: {kind: disk}\nverify: {T: 1}\n")
    with pytest.raises(ValidationError):
        cli.check_requirements(cfg, "solve")


def test_weight_csv(tmp_path):
    code, out, summary = run(tmp_path, "weight", DISK % 80)
    assert code == 0
    rows = (out / "weight.csv").read_text().splitlines()
    assert rows[0].startswith("j,t_j,eta_1,eta_2,R_j")
    fields = dict(zip(rows[0].split(","), rows[1].split(",")))
    assert float(fields["R_j"]) == pytest.approx(18.0, rel=1e-12)
    assert float(fields["beta"]) == pytest.approx(4.76, rel=1e-12)
    assert float(fields["window_threshold"]) == pytest.approx(361 / 4.76, rel=1e-12)
    names = [c["name"] for c in summary["checks"]]
    assert len(names) == len(set(names))


def test_partition_csv(tmp_path):
    text = ("domain: {kind: disk}\nfield: {kind: rotation}\npartition: {sstar: 0.75}\n"
            f"verify: {{T: {math.pi / 2!r}}}\n")
    code, out, summary = run(tmp_path, "partition", text)
    assert code == 0 and summary["info"]["m"] == 3
    assert len((out / "partition.csv").read_text().splitlines()) == 4


def test_observability_exit_policy(tmp_path):
    code, _, summary = run(tmp_path, "verify-observability", DISK % 70)
    assert code == 0 and summary["info"]["verdict"] == "max cond fails"
    cond = [c for c in summary["checks"] if c["name"] == "observability time condition"][0]
    assert not cond["passed"] and not cond["hard"]
    code, out, summary = run(tmp_path, "verify-observability", DISK % 70, "--require-observability")
    assert code == 1 and summary["failures"] == ["observability time condition"]
    rows = (out / "observability.csv").read_text().splitlines()
    assert len(rows) == 11 and all(math.isfinite(float(r.split(",")[3])) for r in rows[1:])


def test_counterexample_subcommand(tmp_path):
    code, out, summary = run(tmp_path, "counterexample", "counterexample: {sigma: 1, rho: 0.5}\n")
    assert code == 0
    assert summary["info"]["trace_norm"] <= 1e-12 * summary["info"]["u0_norm"]
    assert summary["info"]["verdict"] == "observability fails"
    data = np.loadtxt(out / "counterexample.csv", delimiter=",", skiprows=1)
    assert np.allclose(data[:, 3], 0.5)


def test_solve_and_determinism(tmp_path):
    text = DISK % 1.0
    code, out, _ = run(tmp_path, "solve", text)
    assert code == 0
    first = (out / "slices.csv").read_bytes()
    code, out, _ = run(tmp_path, "solve", text)
    assert (out / "slices.csv").read_bytes() == first
    head = (out / "trace.csv").read_text().splitlines()[0]
    assert head == "node,t,g,h_dot_nu,in_sigma"


def test_verify_carleman_subcommand(tmp_path):
    text = DISK % 2.0 + "partition: {mode: times, times: [0, 1, 2]}\nverify.family: 2\nverify.holdout: 2\n"
    text = text.replace("verify: {T: 2.0}", "verify.T: 2.0")
    code, out, summary = run(tmp_path, "verify-carleman", text, "--seed", "7")
    assert code == 0, summary["failures"]
    assert math.isfinite(summary["info"]["C_uniform"])
    rows = (out / "carleman.csv").read_text().splitlines()
    assert len(rows) == 1 + 4 * 16


def test_error_record(tmp_path):
    code, out, summary = run(tmp_path, "weight", "domain: {kind: disk}\npartition: {sstar: 0.5}\n")
    assert code == 2
    assert summary["error"]["type"] == "ValidationError"
    code, out, summary = run(tmp_path, "weight", "domain: {kind: disk, radius: -1}\n"
                             "field: {kind: constant, vector: [1, 0]}\nverify: {T: 1}\n")
    assert code == 2 and summary["error"]["type"] == "InvalidDomain"

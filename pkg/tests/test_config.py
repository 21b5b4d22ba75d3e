from pathlib import Path

import pytest

from robust_imrt.config import SCHEMA, build_config, defaults, load_config, parse_config
from robust_imrt.errors import ParseError, SchemaError

EXAMPLE = Path(__file__).resolve().parents[1] / "config" / "planner.example.yaml"


def test_empty_document_gives_defaults():
    cfg = parse_config("")
    assert cfg.raw == defaults()
    assert cfg.algorithm == "cso" and cfg.seed == 0
    assert cfg.params["cso"].max_iterations == 2000
    assert cfg.uncertainty.nominal.mass.tolist() == [0.1, 0.2, 0.4, 0.2, 0.1]


def test_minimal_partial_config():
    cfg = parse_config("phantom:\n  rows: 32\n")
    expected = defaults()
    expected["phantom"]["rows"] = 32
    assert cfg.raw == expected


def test_example_file_is_the_defaults():
    assert load_config(EXAMPLE).raw == defaults()


def test_example_file_documents_every_key():
    text = EXAMPLE.read_text()

    def keys(schema):
        for k, v in schema.items():
            yield k
            if isinstance(v, dict):
                yield from keys(v)

    for key in keys(SCHEMA):
        assert f"{key}:" in text, key


@pytest.mark.parametrize(
    "text, key",
    [
        ("optimizer:\n  cso:\n    pa: 1.5\n", "optimizer.cso.pa"),
        ("goals:\n  tumor_low_gy: 80\n  tumor_high_gy: 72\n", "goals.tumor_low_gy"),
        ("phantom:\n  colour: red\n", "phantom.colour"),
        ("extra: 1\n", "extra"),
        ("phantom:\n  rows: 8\n", "phantom.rows"),
        ("phantom:\n  rows: 20.5\n", "phantom.rows"),
        ("optimizer:\n  algorithm: pso\n", "optimizer.algorithm"),
        ("optimizer:\n  fpa:\n    levy:\n      lambda: 3.5\n", "optimizer.fpa.levy.lambda"),
        ("motion:\n  nominal: [0.5, 0.5, 0.5, 0.5, 0.5]\n", "motion.nominal"),
        ("motion:\n  nominal: [0.5, 0.5]\n", "motion.nominal"),
        ("motion:\n  lower: [0.5, 0.5, 0.5, 0.5, 0.5]\n", "motion.lower"),
        ("optimizer:\n  bso:\n    f_min: 3\n", "optimizer.bso.f_min"),
        ("goals: 5\n", "goals"),
    ],
)
def test_schema_errors_name_the_key(text, key):
    with pytest.raises(SchemaError) as info:
        parse_config(text)
    assert info.value.key == key


def test_reversed_band_message():
    with pytest.raises(SchemaError, match="tumor band"):
        parse_config("goals:\n  tumor_low_gy: 80\n  tumor_high_gy: 72\n")


def test_malformed_yaml():
    with pytest.raises(ParseError):
        parse_config("phantom: [rows: 3\n")


def test_missing_file(tmp_path):
    with pytest.raises(ParseError):
        load_config(tmp_path / "nope.yaml")


def test_shared_iteration_override():
    cfg = parse_config("optimizer:\n  max_iterations: 12\n  cso:\n    max_iterations: 99\n")
    assert {p.max_iterations for p in cfg.params.values()} == {12}


def test_with_overrides():
    cfg = parse_config("")
    other = cfg.with_overrides(algorithm="bso", seed=2**63 + 5)
    assert (other.algorithm, other.seed) == ("bso", 2**63 + 5)
    assert (cfg.algorithm, cfg.seed) == ("cso", 0)


def test_build_config_accepts_its_own_output():
    raw = defaults()
    assert build_config(build_config(raw).raw).raw == raw

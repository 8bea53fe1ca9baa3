from __future__ import annotations

import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from qtraj.config import ConfigError, build_config, coerce, load_config_file, parse_flat
from qtraj.experiments import REGISTRY, defaults
from qtraj.output import fmt, read_columns, read_csv, read_manifest, sha256, write_csv, write_manifest


class TestFlatConfig:
    def test_parse(self):
        text = "# header\nseed = 3\n\n mu_over_gamma = 0.1, 1  # trailing\n"
        assert parse_flat(text) == {"seed": "3", "mu_over_gamma": "0.1, 1"}

    @pytest.mark.parametrize("text", ["a = 1\na = 2", "no equals sign", " = 3"])
    def test_malformed(self, text):
        with pytest.raises(ConfigError):
            parse_flat(text)

    @given(st.integers(-10**6, 10**6))
    def test_int_roundtrip(self, k):
        assert coerce(str(k), 0) == k

    @given(st.floats(allow_nan=False, allow_infinity=False))
    def test_float_roundtrip(self, x):
        assert coerce(repr(x), 1.0) == x

    def test_coercions(self):
        assert coerce("inf", 1.0) == math.inf
        assert coerce("yes", False) is True
        assert coerce("0.1, 2", (1.0,)) == (0.1, 2.0)
        assert coerce("1e3", 0) == 1000
        for bad, proto in (("1.5", 0), ("maybe", True), ("x", 1.0)):
            with pytest.raises(ConfigError):
                coerce(bad, proto)

    def test_unknown_key_lists_valid_ones(self):
        with pytest.raises(ConfigError, match="valid keys"):
            build_config("stark-je", defaults("stark-je"), {"nonsense": "1"}, None, None, None, 1)

    def test_precedence(self, tmp_path):
        f = tmp_path / "c.cfg"
        f.write_text("experiment = spont-em\nn_traj = 50\nseed = 4\ndt = 0.001\n", encoding="utf-8")
        cfg = build_config("spont-em", defaults("spont-em"), load_config_file(f), None, 7, str(tmp_path), 1)
        assert (cfg.n_traj, cfg.seed, cfg.params["dt"]) == (50, 7, 0.001)
        with pytest.raises(ConfigError):
            build_config("stark-je", defaults("stark-je"), load_config_file(f), None, None, None, 1)

    def test_every_default_survives_a_string_roundtrip(self):
        for name in REGISTRY:
            d = defaults(name)
            over = {k: ",".join(fmt(x) for x in v) if isinstance(v, tuple) else fmt(v)
                    for k, v in d["params"].items()}
            cfg = build_config(name, d, over, None, None, None, 1)
            assert cfg.params == d["params"]


class TestOutput:
    def test_csv_is_crlf_with_header(self, tmp_path):
        p = write_csv(tmp_path / "t.csv", ("a", "b"), [(1, 0.5), (2, math.inf)])
        raw = p.read_bytes()
        assert raw.count(b"\r\n") == 3
        assert raw.startswith(b"a,b\r\n")
        assert read_csv(p) == (["a", "b"], [["1", "0.5"], ["2", "inf"]])

    def test_ragged_row(self, tmp_path):
        with pytest.raises(ValueError):
            write_csv(tmp_path / "t.csv", ("a", "b"), [(1,)])

    def test_missing_column(self, tmp_path):
        p = write_csv(tmp_path / "t.csv", ("a",), [(1,)])
        with pytest.raises(ValueError, match="lacks columns"):
            read_columns(p, ("a", "b"))

    @given(st.floats(allow_nan=False))
    def test_float_format_roundtrips(self, x):
        assert float(fmt(x)) == x

    def test_manifest_hashes(self, tmp_path):
        p = write_csv(tmp_path / "t.csv", ("a",), [(1,)])
        m = read_manifest(write_manifest(tmp_path, {"experiment": "x"}, "0", 1.234, [p]))
        assert m["files"] == {"t.csv": sha256(p)}
        assert m["config"] == {"experiment": "x"}

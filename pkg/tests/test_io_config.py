import logging

import numpy as np
import pytest

from apinet.config import DEFAULTS, RunConfig, load_config, parse_config
from apinet.errors import ConfigError, FormatError
from apinet.params_io import load_params, save_params


class TestConfig:
    def test_defaults_only(self):
        rc = parse_config("# nothing set\n\n")
        assert rc.values == DEFAULTS
        assert rc.train_config().lr0 == DEFAULTS["lr0"]
        assert rc.synth_spec().seed == DEFAULTS["data_seed"]

    def test_values_and_comments(self):
        rc = parse_config("epochs = 7  # short run\nmutual=sum\nlam = 0.5\ndata_seed = 3\n")
        tc = rc.train_config()
        assert (tc.epochs, tc.mutual, tc.lam) == (7, "sum", 0.5)
        assert rc.synth_spec().seed == 3

    def test_unknown_key_names_line(self):
        with pytest.raises(ConfigError, match="line 2.*'learning_rate'"):
            parse_config("epochs = 3\nlearning_rate = 0.1\n")

    def test_bad_value_names_key_and_line(self):
        with pytest.raises(ConfigError, match="line 1.*epochs"):
            parse_config("epochs = many\n")

    def test_missing_equals(self):
        with pytest.raises(ConfigError, match="line 1"):
            parse_config("epochs 3\n")

    def test_duplicate(self):
        with pytest.raises(ConfigError, match="duplicate key 'seed'"):
            parse_config("seed = 1\nseed = 2\n")

    def test_invalid_combination(self):
        with pytest.raises(ConfigError):
            parse_config("mutual = individual\ngate = single\n")

    def test_round_trip(self, tmp_path):
        rc = parse_config("epochs = 9\nmutual = product\nnoise_sigma = 0.07\n")
        rc.write(tmp_path / "c.txt")
        again = load_config(tmp_path / "c.txt")
        assert again.values == rc.values

    def test_echo_defaults(self, caplog):
        rc = parse_config("epochs = 9\n")
        with caplog.at_level(logging.INFO):
            rc.echo_defaults()
        text = caplog.text
        assert "default lr0" in text and "default epochs" not in text
        assert text.count("default ") == len(DEFAULTS) - 1

    def test_load_none(self):
        assert load_config().values == RunConfig().values


class TestParams:
    def params(self):
        rng = np.random.default_rng(0)
        return {"encoder.w1": rng.normal(size=(3, 4)), "encoder.b1": rng.normal(size=3),
                "scalar": np.array(2.5), "empty": np.zeros((0, 2))}

    def test_round_trip_bit_exact(self, tmp_path):
        P = self.params()
        save_params(tmp_path / "p.bin", P, {"mutual": "mlp", "d": 4})
        back, meta = load_params(tmp_path / "p.bin")
        assert list(back) == list(P)
        for k in P:
            assert back[k].shape == P[k].shape and back[k].tobytes() == P[k].tobytes()
        assert meta == {"mutual": "mlp", "d": "4"}

    def test_magic(self, tmp_path):
        save_params(tmp_path / "p.bin", self.params())
        buf = bytearray((tmp_path / "p.bin").read_bytes())
        assert bytes(buf[:7]) == b"APIPM1\n"
        buf[3] = ord("X")
        (tmp_path / "p.bin").write_bytes(bytes(buf))
        with pytest.raises(FormatError) as info:
            load_params(tmp_path / "p.bin")
        assert info.value.offset == 3

    def test_truncated(self, tmp_path):
        save_params(tmp_path / "p.bin", self.params())
        buf = (tmp_path / "p.bin").read_bytes()
        (tmp_path / "p.bin").write_bytes(buf[:-3])
        with pytest.raises(FormatError, match="truncated"):
            load_params(tmp_path / "p.bin")

    def test_trailing(self, tmp_path):
        save_params(tmp_path / "p.bin", self.params())
        (tmp_path / "p.bin").write_bytes((tmp_path / "p.bin").read_bytes() + b"\0")
        with pytest.raises(FormatError, match="trailing"):
            load_params(tmp_path / "p.bin")

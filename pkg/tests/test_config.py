import pytest

from randcode.config import ConfigError, load_config, parse_config, parse_q


@pytest.mark.parametrize("text,want", [("32", 32), ("2^5", 32), ("2**15", 2 ** 15), (" 2 ^ 30 ", 2 ** 30), (8, 8)])
def test_parse_q(text, want):
    assert parse_q(text) == want


def test_parse_q_rejects_garbage():
    with pytest.raises(ConfigError):
        parse_q("two")


def test_bare_and_sectioned_files_agree():
    body = "T = 1e-2\nxi = 0\nq = 2^5  # label size\nN = 10\n"
    assert parse_config(body) == parse_config("[randcode]\n" + body) == {"T": 0.01, "xi": 0.0, "q": 32, "N": 10}


def test_keys_are_case_sensitive():
    with pytest.raises(ConfigError, match="unknown"):
        parse_config("t = 0.1\n")


@pytest.mark.parametrize("text", ["N = ten\n", "[other]\nT = 1\n", "T 0.1 = = \n[", "seed = 1.5\n"])
def test_bad_files(text):
    with pytest.raises(ConfigError):
        parse_config(text)


def test_load_config(tmp_path):
    f = tmp_path / "run.ini"
    f.write_text("sigma_x2 = 0.3\ngamma = -0.2\n")
    assert load_config(f) == {"sigma_x2": 0.3, "gamma": -0.2}
    with pytest.raises(ConfigError):
        load_config(tmp_path / "missing.ini")

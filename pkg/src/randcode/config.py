"""Run-configuration files: ``key = value`` lines, optionally under a ``[randcode]`` section.

Recognised keys are the common command-line parameters::

    T = 1e-2
    xi = 0
    sigma_x2 = 0.095
    q = 2^5
    gamma = -0.45
    delta = -0.78
    N = 2000
    b = 8
    seed = 1
"""

from __future__ import annotations

import configparser
import re

SECTION = "randcode"


class ConfigError(ValueError):
    pass


def parse_q(text) -> int:
    """Accept ``32``, ``2^5`` or ``2**5``."""
    if isinstance(text, int):
        return text
    s = str(text).strip()
    m = re.fullmatch(r"2\s*(?:\^|\*\*)\s*(\d+)", s)
    try:
        return 2 ** int(m.group(1)) if m else int(s)
    except ValueError:
        raise ConfigError(f"cannot read q from {text!r}") from None


FIELDS = {
    "T": float,
    "xi": float,
    "sigma_x2": float,
    "q": parse_q,
    "gamma": float,
    "delta": float,
    "N": int,
    "b": int,
    "seed": int,
}


def parse_config(text: str) -> dict:
    if not re.search(r"^\s*\[", text, flags=re.M):
        text = f"[{SECTION}]\n" + text
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    cp.optionxform = str  # keys are case-sensitive (T vs t)
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(str(exc)) from None
    if not cp.has_section(SECTION):
        raise ConfigError(f"missing [{SECTION}] section")
    out = {}
    for key, raw in cp.items(SECTION):
        if key not in FIELDS:
            raise ConfigError(f"unknown config key {key!r}")
        try:
            out[key] = FIELDS[key](raw)
        except ValueError:
            raise ConfigError(f"bad value for {key}: {raw!r}") from None
    return out


def load_config(path) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            return parse_config(fh.read())
    except OSError as exc:
        raise ConfigError(f"cannot read config file: {exc}") from None

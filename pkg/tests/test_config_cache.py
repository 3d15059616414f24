import json
import logging
from pathlib import Path

import pytest

from crcensus.cache import CACHE_ENV, ConstantsCache, cache_key, default_cache_dir
from crcensus.config import load_config, parse_config
from crcensus.errors import ConfigError
from crcensus.heisenberg import HeisenbergPoint, cayley_inverse
from crcensus.quadrature import compute_structural_constants

MINIMAL = """
critical_points:
  - id: xi
    position: {sphere: [[0.0, 0.0], [1.0, 0.0]]}
    beta: 2.0
    b: [-1.0, -1.0, -1.0]
    K: 1.0
"""


def point(pid, pos="{sphere: [[0.0, 0.0], [1.0, 0.0]]}", beta=2.0, b="[-1, -1, -1]", k=1.0):
    return (f"  - id: {pid}\n    position: {pos}\n    beta: {beta}\n    b: {b}\n    K: {k}\n")


class TestConfig:
    def test_defaults(self):
        cfg = parse_config(MINIMAL)
        assert (cfg.tolerance, cfg.mc_samples, cfg.c_G) == (1e-8, 10**6, 1.0)
        assert cfg.pd_margin == 1e-12 and cfg.chart_radius == 0.5 and cfg.blowup_threshold == 1e4
        assert cfg.raw["quadrature"]["tolerance"] == 1e-8
        assert cfg.betas == [2.0]

    def test_duplicate_id(self):
        text = "critical_points:\n" + point("xi") + point("xi", "{sphere: [[1, 0], [0, 0]]}")
        with pytest.raises(ConfigError) as info:
            parse_config(text)
        assert any("duplicate id 'xi'" in v for v in info.value.violations)

    def test_beta_range_cited(self):
        with pytest.raises(ConfigError) as info:
            parse_config("critical_points:\n" + point("xi", beta=4.2))
        assert any("[2, 4)" in v for v in info.value.violations)

    def test_all_violations_listed(self):
        text = ("critical_points:\n" + point("a", beta=4.5) + point("b", b="[0, 1, 1]", k=-2)
                + "green: {c_G: -1}\nquadrature: {mc_samples: 10}\nbogus: 1\n")
        with pytest.raises(ConfigError) as info:
            parse_config(text)
        paths = [v.split(":")[0] for v in info.value.violations]
        for expected in ("critical_points[0].beta", "critical_points[1].b[0]",
                         "critical_points[1].K", "green.c_G", "quadrature.mc_samples", "bogus"):
            assert expected in paths

    def test_parse_error_location(self):
        with pytest.raises(ConfigError) as info:
            parse_config("critical_points:\n  - id: [unclosed\n", "bad.yaml")
        msg = str(info.value)
        assert "bad.yaml:" in msg and any(f"bad.yaml:{line}:" in msg for line in (2, 3))

    def test_chart_position(self):
        cfg = parse_config("critical_points:\n" + point("xi", "{chart: [0.3, -0.1, 0.2]}"))
        expected = cayley_inverse(HeisenbergPoint(0.3 - 0.1j, 0.2))
        assert cfg.profiles[0].position == expected

    def test_coincident_positions(self):
        text = ("critical_points:\n" + point("a", "{chart: [0, 0, 0]}")
                + point("b", "{sphere: [[0, 0], [2, 0]]}"))
        with pytest.raises(ConfigError) as info:
            parse_config(text)
        assert any("coincide" in v for v in info.value.violations)

    def test_scenario_checks(self):
        text = MINIMAL + ("flow:\n  scenarios:\n    - name: s\n      bubbles:\n"
                          "        - {profile: nope, lambda: 5}\n")
        with pytest.raises(ConfigError) as info:
            parse_config(text)
        msgs = " ".join(info.value.violations)
        assert "unknown critical point 'nope'" in msgs and "lambda_min" in msgs

    def test_missing_scenario(self):
        with pytest.raises(ConfigError):
            parse_config(MINIMAL).scenario("absent")

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError):
            load_config(tmp_path / "none.yaml")

    def test_shipped_configs_load(self):
        for name in ("k1_pair", "mixed"):
            cfg = load_config(Path(__file__).resolve().parent.parent / "configs" / f"{name}.yaml")
            assert cfg.profiles and cfg.scenarios

    @pytest.mark.parametrize("edit", [
        ("K: 1.0", "K: 1.5"), ("beta: 2.0", "beta: 2.5"), ("[-1.0, -1.0, -1.0]", "[-1.0, -2.0, -1.0]"),
        ("[1.0, 0.0]]", "[0.0, 1.0]]"), ("id: xi", "id: xj")])
    def test_hash_tracks_inputs(self, edit):
        base = parse_config(MINIMAL).config_hash()
        assert parse_config(MINIMAL.replace(*edit)).config_hash() != base
        assert parse_config(MINIMAL).config_hash() == base

    def test_hash_tracks_settings(self):
        base = parse_config(MINIMAL).config_hash()
        assert parse_config(MINIMAL + "green: {c_G: 2.0}\n").config_hash() != base
        assert parse_config(MINIMAL + "quadrature: {tolerance: 1.0e-6}\n").config_hash() != base


class TestCache:
    def test_hit_returns_identical_value(self, tmp_path):
        a = ConstantsCache(tmp_path)
        first = compute_structural_constants(2.0, 1e-8, a)
        b = ConstantsCache(tmp_path)
        second = compute_structural_constants(2.0, 1e-8, b)
        assert first == second and b.misses == 0 and b.hits > 0

    def test_file_is_readable_and_versioned(self, tmp_path):
        c = ConstantsCache(tmp_path)
        compute_structural_constants(2.0, 1e-8, c)
        data = json.loads(c.path.read_text())
        assert data["schema"] == 1 and c.path.name == "constants-v1.json"
        assert cache_key("S", None, 1e-8) in data["entries"]
        assert cache_key("kappa_prime", 2.0, 1e-8) in data["entries"]

    def test_tolerance_mismatch_keeps_both(self, tmp_path):
        c = ConstantsCache(tmp_path)
        compute_structural_constants(2.5, 1e-8, c)
        n = len(c)
        compute_structural_constants(2.5, 1e-6, c)
        assert len(c) == 2 * n
        keys = json.loads(c.path.read_text())["entries"]
        assert cache_key("S", None, 1e-8) in keys and cache_key("S", None, 1e-6) in keys

    def test_deleted_cache_recomputes(self, tmp_path):
        c = ConstantsCache(tmp_path)
        first = compute_structural_constants(2.0, 1e-8, c)
        c.path.unlink()
        fresh = ConstantsCache(tmp_path)
        again = compute_structural_constants(2.0, 1e-8, fresh)
        assert fresh.hits == 0 and fresh.misses > 0 and fresh.path.exists()
        assert again == first

    @pytest.mark.parametrize("content", ["{not json", '{"schema": 99, "entries": {}}', "[]"])
    def test_corrupt_cache_rebuilt_with_warning(self, tmp_path, caplog, content):
        (tmp_path / "constants-v1.json").write_text(content)
        with caplog.at_level(logging.WARNING, logger="crcensus.cache"):
            c = ConstantsCache(tmp_path)
        assert "rebuilding" in caplog.text and len(c) == 0
        compute_structural_constants(2.0, 1e-8, c)
        assert json.loads(c.path.read_text())["schema"] == 1

    def test_environment_variable(self, tmp_path, monkeypatch):
        monkeypatch.setenv(CACHE_ENV, str(tmp_path / "x"))
        assert default_cache_dir() == tmp_path / "x"
        assert ConstantsCache().directory == tmp_path / "x"

import pytest

from cva_config import CvaConfig, load_config_from_env

VARIABLES = ["CVA_COLOR", "CVA_MAX_SIGMA", "CVA_MAX_MENU", "CVA_MAX_CONTEXT", "CVA_STRICT_TOTALITY",
             "CVA_REPORTS_DIR", "CVA_LOG_LEVEL", "CVA_SEED", "CVA_RANDOM_SYSTEMS"]


@pytest.fixture(autouse=True)
def clean_env(monkeypatch, tmp_path):
    for name in VARIABLES:
        # set first so teardown also removes values a .env file loaded
        monkeypatch.setenv(name, "")
        monkeypatch.delenv(name)
    monkeypatch.chdir(tmp_path)


class TestLoadConfig:
    def test_defaults(self, monkeypatch):
        monkeypatch.setenv("CVA_COLOR", "0")
        config = load_config_from_env()
        assert config == CvaConfig()

    def test_overrides(self, monkeypatch):
        monkeypatch.setenv("CVA_MAX_SIGMA", "2")
        monkeypatch.setenv("CVA_STRICT_TOTALITY", "1")
        monkeypatch.setenv("CVA_LOG_LEVEL", "debug")
        config = load_config_from_env()
        assert config.max_sigma == 2
        assert config.strict_totality
        assert config.log_level == "DEBUG"

    def test_dotenv_file(self, tmp_path):
        env = tmp_path / ".env"
        env.write_text("CVA_SEED=7\nCVA_REPORTS_DIR=out\n", encoding="utf-8")
        config = load_config_from_env(str(env))
        assert config.seed == 7
        assert config.reports_dir == "out"

    @pytest.mark.parametrize("name,value", [
        ("CVA_COLOR", "yes"),
        ("CVA_MAX_SIGMA", "0"),
        ("CVA_MAX_MENU", "many"),
        ("CVA_LOG_LEVEL", "LOUD"),
        ("CVA_RANDOM_SYSTEMS", "0"),
    ])
    def test_invalid_values_name_the_variable(self, monkeypatch, name, value):
        monkeypatch.setenv(name, value)
        with pytest.raises(ValueError, match=name):
            load_config_from_env()

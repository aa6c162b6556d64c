"""
Configuration module for the Journal Impact Factor Simulator
"""
from functools import lru_cache
from pathlib import Path

from pydantic_settings import BaseSettings


PRESETS_DIR = Path(__file__).parent / "presets"


class Settings(BaseSettings):
    """Process settings loaded from environment variables"""

    # Logging
    log_level: str = "INFO"

    # CLI defaults
    output_dir: str = "results"
    default_jobs: int = 1

    # API Configuration
    api_secret_key: str = "sk_test_123456789"
    api_host: str = "0.0.0.0"
    api_port: int = 8000
    max_api_articles: int = 20000  # larger runs belong on the CLI

    # Debug Mode
    debug: bool = False

    class Config:
        env_file = ".env"
        env_file_encoding = "utf-8"
        case_sensitive = False


@lru_cache()
def get_settings() -> Settings:
    """Get cached settings instance"""
    return Settings()

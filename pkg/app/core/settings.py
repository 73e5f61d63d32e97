import os

from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    OUTPUT_DIR: str = "out"
    WORKERS: int = 4
    LOG_LEVEL: str = "INFO"
    CSV_SCHEMA_VERSION: int = 1
    DEFAULT_SEED: int = 2024

    model_config = SettingsConfigDict(env_file=f'{os.path.dirname(__file__)}/../../.env', extra='ignore')


settings = Settings()

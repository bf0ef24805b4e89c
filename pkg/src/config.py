"""Runtime settings

Only constructor arguments and an optional ``spcgan-settings.json`` in the working
directory are consulted. Environment variables are ignored so that a run is fully
described by its config files.
"""

from pydantic_settings import (
    BaseSettings,
    JsonConfigSettingsSource,
    PydanticBaseSettingsSource,
    SettingsConfigDict,
)


class Settings(BaseSettings):
    """Process-wide runtime settings"""

    model_config = SettingsConfigDict(
        json_file="spcgan-settings.json",
        json_file_encoding="utf-8",
        extra="forbid",
    )

    # Torch execution
    device: str = "cpu"
    torch_threads: int | None = None
    deterministic: bool = True

    # Resampling refuses outputs larger than this on either side
    max_dimension: int = 8192

    # Report emission
    csv_float_format: str = "%.10g"
    plot_dpi: int = 120

    @classmethod
    def settings_customise_sources(
        cls,
        settings_cls: type[BaseSettings],
        init_settings: PydanticBaseSettingsSource,
        env_settings: PydanticBaseSettingsSource,
        dotenv_settings: PydanticBaseSettingsSource,
        file_secret_settings: PydanticBaseSettingsSource,
    ) -> tuple[PydanticBaseSettingsSource, ...]:
        return (init_settings, JsonConfigSettingsSource(settings_cls))


# Global settings instance
settings = Settings()

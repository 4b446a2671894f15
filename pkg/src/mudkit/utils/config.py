"""Runtime defaults and their environment overrides."""
import os
from dataclasses import dataclass, replace

from .errors import ScenarioError

TOL_ENV_VAR = "MUDKIT_DEFAULT_TOL"


@dataclass(frozen=True)
class Settings:
    """Numerical defaults shared by the library and the CLI."""

    quad_tol: float = 1e-9
    quad_limit: int = 1_000_000
    order_tol: float = 1e-10
    order_grid_size: int = 1001
    pb_max_len: int = 10_000
    mc_block_size: int = 65_536
    csv_float_format: str = "%.12g"


DEFAULT_SETTINGS = Settings()


def get_settings() -> Settings:
    """Return the defaults with ``MUDKIT_DEFAULT_TOL`` applied if set."""
    raw = os.environ.get(TOL_ENV_VAR)
    if raw is None or raw.strip() == "":
        return DEFAULT_SETTINGS
    try:
        tol = float(raw)
    except ValueError:
        raise ScenarioError(TOL_ENV_VAR, f"not a number: {raw!r}")
    if not tol > 0 or tol != tol:
        raise ScenarioError(TOL_ENV_VAR, f"must be a positive tolerance, got {raw!r}")
    return replace(DEFAULT_SETTINGS, quad_tol=tol)


def default_tol() -> float:
    return get_settings().quad_tol

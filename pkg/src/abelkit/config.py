import os
from contextlib import contextmanager
from dataclasses import dataclass, field, fields

DEFAULT_SEED = 0xABE1


def env_seed():
    raw = os.environ.get("ABELKIT_SEED")
    if raw is None or raw.strip() == "":
        return DEFAULT_SEED
    return int(raw, 0)


@dataclass(frozen=True)
class Settings:
    """Default tolerances and sampling parameters.

    Every operation that needs one of these takes an explicit keyword
    override; this object only records the defaults in one place.
    """

    seed: int = field(default_factory=env_seed)
    samples: int = 32
    tol: float = 1e-9
    sample_range: tuple = (0.1, 3.0)
    rtol: float = 1e-9
    atol: float = 1e-12
    quad_tol: float = 1e-10
    pole_guard: float = 1e-6
    # chosen by the gauge-invariance test in tests/test_abel_model.py
    phi5_variant: str = "relative"


SETTINGS = Settings()


@contextmanager
def overridden(**changes):
    """Temporarily change fields of :data:`SETTINGS` (used by the CLI flags)."""
    unknown = set(changes) - {f.name for f in fields(Settings)}
    if unknown:
        raise TypeError(f"unknown settings: {sorted(unknown)}")
    old = {k: getattr(SETTINGS, k) for k in changes}
    for k, v in changes.items():
        object.__setattr__(SETTINGS, k, v)
    try:
        yield SETTINGS
    finally:
        for k, v in old.items():
            object.__setattr__(SETTINGS, k, v)

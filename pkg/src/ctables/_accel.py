"""Backend switch for the hot kernels.

Set ``CTABLES_DISABLE_NUMBA=1`` before import to force the pure-numpy path.
"""
import os

try:
    from numba import njit
    HAS_NUMBA = True
except ImportError:  # pragma: no cover
    HAS_NUMBA = False

    def njit(*args, **kwargs):
        if len(args) == 1 and callable(args[0]) and not kwargs:
            return args[0]
        return lambda fn: fn


def _env_disabled() -> bool:
    return os.environ.get("CTABLES_DISABLE_NUMBA", "0").lower() in ("1", "true", "yes")


_use_numba = HAS_NUMBA and not _env_disabled()


def use_numba() -> bool:
    return _use_numba


def set_backend(name: str) -> None:
    """Select ``"numba"`` or ``"numpy"`` at runtime (used by the benchmark)."""
    global _use_numba
    if name == "numba":
        if not HAS_NUMBA:
            raise RuntimeError("numba is not installed")
        _use_numba = True
    elif name == "numpy":
        _use_numba = False
    else:
        raise ValueError(f"unknown backend {name!r}")


def backend() -> str:
    return "numba" if _use_numba else "numpy"

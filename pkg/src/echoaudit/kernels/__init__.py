"""Backend selection for the residual-operator kernels.

The compiled Cython extension is preferred when it imported cleanly; the
NumPy implementation is the fallback.  ``ECHOAUDIT_KERNELS=fallback`` (or
``compiled``) in the environment forces a choice, and ``set_backend`` switches
at runtime — the benchmark and the cross-checking tests use both paths.
"""

from __future__ import annotations

import os

from . import _residual_np

try:
    from . import _residual_cy
except ImportError:
    _residual_cy = None

_BACKENDS = {"fallback": _residual_np}
if _residual_cy is not None:
    _BACKENDS["compiled"] = _residual_cy


def _default_backend() -> str:
    forced = os.environ.get("ECHOAUDIT_KERNELS", "").strip().lower()
    if forced:
        if forced not in _BACKENDS:
            raise ImportError(
                f"ECHOAUDIT_KERNELS={forced!r} requested but only "
                f"{sorted(_BACKENDS)} are available"
            )
        return forced
    return "compiled" if "compiled" in _BACKENDS else "fallback"


_active = _BACKENDS[_default_backend()]


def available_backends() -> tuple[str, ...]:
    return tuple(sorted(_BACKENDS))


def active_backend() -> str:
    return _active.BACKEND


def set_backend(name: str) -> None:
    global _active
    if name not in _BACKENDS:
        raise ValueError(f"unknown kernel backend {name!r}; have {sorted(_BACKENDS)}")
    _active = _BACKENDS[name]


def get_module(name: str | None = None):
    """Return a kernel module by name (default: the active one)."""
    if name is None:
        return _active
    if name not in _BACKENDS:
        raise ValueError(f"unknown kernel backend {name!r}; have {sorted(_BACKENDS)}")
    return _BACKENDS[name]


def residual_matvec(indptr, indices, data, sqrt_r, sqrt_c, v):
    return _active.residual_matvec(indptr, indices, data, sqrt_r, sqrt_c, v)


def residual_rmatvec(indptr, indices, data, sqrt_r, sqrt_c, u):
    return _active.residual_rmatvec(indptr, indices, data, sqrt_r, sqrt_c, u)

"""Backend selection for the distance kernels.

The compiled ``_ckernels`` extension is used when importable, otherwise the
numpy implementation in ``_pykernels``. ``TRANSFERCLUSTER_KERNELS=python``
(or ``cython``) forces a backend at import time; ``set_backend`` switches at
runtime (used by the kernel benchmark and the equivalence tests).
"""

from __future__ import annotations

import os

from . import _pykernels

try:
    from . import _ckernels
except ImportError:
    _ckernels = None

_BACKENDS = {"python": _pykernels}
if _ckernels is not None:
    _BACKENDS["cython"] = _ckernels

_env = os.environ.get("TRANSFERCLUSTER_KERNELS", "").strip().lower()
if _env:
    if _env not in _BACKENDS:
        raise ImportError(
            f"TRANSFERCLUSTER_KERNELS={_env!r} is not available; "
            f"choose from {sorted(_BACKENDS)}"
        )
    _active = _env
else:
    _active = "cython" if "cython" in _BACKENDS else "python"


def available_backends() -> list[str]:
    return sorted(_BACKENDS)


def active_backend() -> str:
    return _active


def set_backend(name: str) -> None:
    global _active
    if name not in _BACKENDS:
        raise ValueError(f"unknown kernel backend {name!r}; available: {sorted(_BACKENDS)}")
    _active = name


def get_backend(name: str | None = None):
    """Return the backend module (active one by default)."""
    return _BACKENDS[_active if name is None else name]


def pairwise_distances(x, y):
    return _BACKENDS[_active].pairwise_distances(x, y)


def assign_nearest(x, centroids):
    return _BACKENDS[_active].assign_nearest(x, centroids)


def silhouette_parts(x, labels, counts):
    return _BACKENDS[_active].silhouette_parts(x, labels, counts)

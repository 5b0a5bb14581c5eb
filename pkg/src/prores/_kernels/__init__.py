"""Backend selection for the hot kernels.

The compiled Cython module is preferred when importable; otherwise the
numpy fallback is used. Set PRORES_KERNELS=python or =compiled to force a
backend (forcing "compiled" raises if the extension is missing).
"""

import os

_requested = os.environ.get("PRORES_KERNELS", "auto")
if _requested not in ("auto", "python", "compiled"):
    raise ValueError(f"PRORES_KERNELS must be auto, python or compiled, got {_requested!r}")

if _requested == "python":
    from . import _fallback as _impl

    BACKEND = "python"
else:
    try:
        from . import _compiled as _impl  # type: ignore[no-redef]

        BACKEND = "compiled"
    except ImportError:
        if _requested == "compiled":
            raise
        from . import _fallback as _impl  # type: ignore[no-redef]

        BACKEND = "python"

MODE_PR = 0
MODE_DAMPED = 1
MODE_GENERALIZED = 2

step_round = _impl.step_round
phi_terms = _impl.phi_terms


def available_backends():
    names = ["python"]
    try:
        from . import _compiled  # noqa: F401

        names.append("compiled")
    except ImportError:
        pass
    return names


def get_backend(name):
    """Return the raw kernel module for `name` ("python" or "compiled")."""
    if name == "python":
        from . import _fallback

        return _fallback
    if name == "compiled":
        from . import _compiled

        return _compiled
    raise ValueError(f"unknown backend {name!r}")

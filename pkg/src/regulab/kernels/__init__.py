"""Hot stencil kernels with a compiled core and a numpy fallback.

The compiled extension ``regulab._cykernels`` (Cython) is preferred when it
imported cleanly; set REGULAB_BACKEND=py or =cy to force a choice. Both
backends implement the same functions with identical semantics:

``second_diffs``   directional second differences for every node/line,
``combine_pucci``  frame extremization of the extremal-operator sums,
``combine_isaacs`` min-max combination over decomposition weight tables,
``combine_linear`` fixed-weight combination,
``relax_step``     one damped pointwise nonlinear relaxation sweep.

All return freshly allocated arrays; inputs are never mutated.
"""

import os

from . import _py

_FORCED = os.environ.get("REGULAB_BACKEND", "auto").lower()
_cy = None
if _FORCED in ("auto", "cy", "cython"):
    try:
        from regulab import _cykernels as _cy  # type: ignore[attr-defined]
    except ImportError:
        _cy = None
        if _FORCED in ("cy", "cython"):
            raise

_impl = _cy if _cy is not None else _py

BACKEND = "cython" if _cy is not None else "python"

second_diffs = _impl.second_diffs
combine_pucci = _impl.combine_pucci
combine_isaacs = _impl.combine_isaacs
combine_linear = _impl.combine_linear
relax_step = _impl.relax_step


def get_backend(name: str):
    """Return the named backend module ('python' or 'cython')."""
    if name == "python":
        return _py
    if name == "cython":
        if _cy is None:
            raise ImportError("compiled kernels are not available")
        return _cy
    raise ValueError(f"unknown backend {name!r}")


__all__ = [
    "BACKEND",
    "second_diffs",
    "combine_pucci",
    "combine_isaacs",
    "combine_linear",
    "relax_step",
    "get_backend",
]

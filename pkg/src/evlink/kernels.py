"""Kernel backend selection.

Both backends expose the same four functions with the same storage
contract (float32 storage, float64 accumulation):

* evlink._ckernels  - compiled extension (when built)
* evlink._kernels_numpy - numpy fallback

The default is a mixed routing chosen from benchmarks
(benchmarks/bench_kernels.py): the fused elementwise AdamW update and the
rowwise cosine reductions go to the compiled kernels, while the matrix
products stay on numpy's BLAS, which outruns a plain compiled loop at
every size that matters. With no extension built everything falls back to
numpy.

Overrides: EVLINK_PURE_PYTHON=1 forces the fallback;
EVLINK_BACKEND=numpy|cython|mixed picks explicitly. Higher layers call
through this module's attributes, so tests can also swap implementations
in directly.
"""

import os

from evlink import _kernels_numpy

try:
    from evlink import _ckernels
except ImportError:
    _ckernels = None


def _pick_backend() -> str:
    if os.environ.get("EVLINK_PURE_PYTHON"):
        return "numpy"
    requested = os.environ.get("EVLINK_BACKEND")
    if requested:
        if requested not in ("numpy", "cython", "mixed"):
            raise ValueError(f"EVLINK_BACKEND must be numpy, cython or "
                             f"mixed, not '{requested}'")
        if requested != "numpy" and _ckernels is None:
            raise ImportError("EVLINK_BACKEND requested the compiled kernels "
                              "but evlink._ckernels is not built")
        return requested
    return "mixed" if _ckernels is not None else "numpy"


BACKEND = _pick_backend()

if BACKEND == "numpy":
    affine_fwd = _kernels_numpy.affine_fwd
    affine_bwd = _kernels_numpy.affine_bwd
    adamw_update = _kernels_numpy.adamw_update
    rowwise_dot_norms = _kernels_numpy.rowwise_dot_norms
elif BACKEND == "cython":
    affine_fwd = _ckernels.affine_fwd
    affine_bwd = _ckernels.affine_bwd
    adamw_update = _ckernels.adamw_update
    rowwise_dot_norms = _ckernels.rowwise_dot_norms
else:  # mixed: BLAS for matrix products, compiled loops elsewhere
    affine_fwd = _kernels_numpy.affine_fwd
    affine_bwd = _kernels_numpy.affine_bwd
    adamw_update = _ckernels.adamw_update
    rowwise_dot_norms = _ckernels.rowwise_dot_norms


def backend() -> str:
    """Name of the active backend: 'mixed', 'cython' or 'numpy'."""
    return BACKEND


def available_backends() -> dict:
    """Backend name -> implementation module, for benchmarks and tests."""
    out = {"numpy": _kernels_numpy}
    if _ckernels is not None:
        out["cython"] = _ckernels
    return out

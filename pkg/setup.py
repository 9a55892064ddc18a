"""Build script: compiles the optional Cython kernel.

The package is fully functional without the extension (a numpy fallback is
selected at import time), so a failed compile only costs speed. Set
EVBET_NO_EXT=1 to skip the build entirely.
"""

import os
import sys

from setuptools import setup


def extensions():
    if os.environ.get("EVBET_NO_EXT"):
        return []
    try:
        import numpy
        from Cython.Build import cythonize
        from setuptools.extension import Extension
    except ImportError as exc:
        print(f"evbet: skipping C kernel build ({exc})", file=sys.stderr)
        return []
    openmp = [] if sys.platform == "darwin" else ["-fopenmp"]
    ext = Extension(
        "evbet.kernels._ckernels",
        ["src/evbet/kernels/_ckernels.pyx"],
        include_dirs=[numpy.get_include()],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
        extra_compile_args=["-O3"] + openmp,
        extra_link_args=openmp,
    )
    return cythonize([ext], language_level=3)


setup(ext_modules=extensions())

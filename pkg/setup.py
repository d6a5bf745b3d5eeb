"""Build the optional compiled kernels.

The package imports and runs without them; ``forcedchain.kernels`` falls back
to the numpy implementation when the extension is missing.
"""
import os

import numpy as np
from setuptools import Extension, setup

ext_modules = []
# replicas run in parallel through OpenMP unless disabled
omp = [] if os.environ.get("FORCEDCHAIN_NO_OPENMP") == "1" else ["-fopenmp"]
if os.environ.get("FORCEDCHAIN_NO_EXT") != "1":
    try:
        from Cython.Build import cythonize
    except ImportError:  # pragma: no cover
        cythonize = None
    if cythonize is not None:
        ext_modules = cythonize(
            [
                Extension(
                    "forcedchain._ckernels",
                    ["src/forcedchain/_ckernels.pyx"],
                    include_dirs=[np.get_include()],
                    extra_compile_args=["-O3", *omp],
                    extra_link_args=omp,
                    define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                )
            ],
            compiler_directives={"language_level": "3"},
        )

setup(ext_modules=ext_modules)

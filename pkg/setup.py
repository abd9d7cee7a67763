"""Build script for the compiled assembly core.

The package works without the extension (a NumPy fallback is selected at
import time); set CQBEM_PURE=1 to skip compilation entirely, e.g. on a
machine without a C toolchain.
"""

import os

from setuptools import setup

if os.environ.get("CQBEM_PURE"):
    setup()
else:
    import numpy as np
    from Cython.Build import cythonize
    from setuptools import Extension

    ext = Extension(
        "cqbem.kernels._core",
        sources=["src/cqbem/kernels/_core.pyx"],
        include_dirs=[np.get_include()],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
        extra_compile_args=["-O3"],
    )
    setup(ext_modules=cythonize([ext], language_level=3))

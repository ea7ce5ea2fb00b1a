"""Build script for the optional compiled solver kernel.

The package is fully functional without the extension (a numpy fallback is
selected at import time); the extension only accelerates the hot inner loop.
"""

from setuptools import setup
from setuptools.extension import Extension

import numpy as np

ext = Extension(
    "lightpos._kernels._core",
    ["src/lightpos/_kernels/_core.pyx"],
    include_dirs=[np.get_include()],
)
ext.optional = True

try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [ext],
        compiler_directives={
            "language_level": "3",
            "boundscheck": False,
            "wraparound": False,
            "cdivision": True,
        },
    )
except ImportError:
    ext_modules = []

setup(ext_modules=ext_modules)

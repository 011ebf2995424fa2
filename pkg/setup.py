"""Build script: compiles the optional polynomial kernel extension.

The package works without the extension (a numpy fallback is selected at
import time), so any compilation failure downgrades to a pure-Python build
instead of aborting the install.
"""

from setuptools import setup

ext_modules = []
try:
    import numpy
    from Cython.Build import cythonize
    from setuptools import Extension

    ext_modules = cythonize(
        [
            Extension(
                "shotvalue._kernels._poly_cy",
                ["src/shotvalue/_kernels/_poly_cy.pyx"],
                include_dirs=[numpy.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        compiler_directives={"language_level": "3"},
    )
except Exception as exc:  # missing compiler or Cython: fall back to pure Python
    import sys

    print(f"shotvalue: building without compiled kernels ({exc})", file=sys.stderr)

setup(ext_modules=ext_modules)

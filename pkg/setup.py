"""Build script.

The compiled extension is optional: if Cython or a C compiler is missing the
package falls back to the pure NumPy implementation selected at import time.
"""
import os

from setuptools import Extension, setup

ext_modules = []
if os.environ.get("MEMHEAT_NO_EXT") != "1":
    try:
        import numpy
        from Cython.Build import cythonize

        ext = Extension(
            "memheat._backend._mlcore",
            ["src/memheat/_backend/_mlcore.pyx"],
            include_dirs=[numpy.get_include()],
            define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            extra_compile_args=["-O3"],
        )
        ext.optional = True  # build failure must not break the install
        ext_modules = cythonize([ext], language_level=3)
    except ImportError:
        ext_modules = []

setup(ext_modules=ext_modules)

"""Builds the optional compiled shell quadrature.

Without Cython (or a C compiler) the package installs pure-Python and the
numpy backend is used.
"""
import os

from setuptools import Extension, setup

ext_modules = []
if os.environ.get("KERRCHAIN_NO_EXT") != "1":
    try:
        import numpy as np
        from Cython.Build import cythonize
    except ImportError:
        pass
    else:
        openmp = ["-fopenmp"] if os.environ.get("KERRCHAIN_NO_OPENMP") != "1" else []
        ext_modules = cythonize(
            [
                Extension(
                    "kerrchain._shellcore",
                    ["src/kerrchain/_shellcore.pyx"],
                    include_dirs=[np.get_include()],
                    extra_compile_args=["-O3", "-fcx-limited-range"] + openmp,
                    extra_link_args=openmp,
                    define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                )
            ],
            compiler_directives={"language_level": "3"},
        )

setup(ext_modules=ext_modules)

"""Build the optional Cython kernels.

The package works without them (``vsfield._fallback`` is used instead), so a
missing compiler or missing Cython only produces a warning.
"""
import os
import sys

from setuptools import setup

ext_modules = []
if os.environ.get("VSFIELD_NO_EXT") != "1":
    try:
        import numpy as np
        from Cython.Build import cythonize
        from setuptools import Extension

        ext_modules = cythonize(
            [
                Extension(
                    "vsfield._kernels",
                    ["src/vsfield/_kernels.pyx"],
                    include_dirs=[np.get_include()],
                    define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                    extra_compile_args=["-O3"],
                )
            ],
            compiler_directives={"language_level": "3"},
        )
    except Exception as exc:  # pragma: no cover - depends on the build host
        print(f"warning: building without compiled kernels ({exc})", file=sys.stderr)
        ext_modules = []

setup(ext_modules=ext_modules)

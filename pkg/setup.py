"""Builds the optional Cython kernel module.

The package works without it; ``heatflow._backend`` falls back to the
numpy implementations when the extension is missing.
"""
import os

import numpy
from setuptools import Extension, setup

ext_modules = []
if os.environ.get("HEATFLOW_NO_EXT") != "1":
    try:
        from Cython.Build import cythonize

        ext_modules = cythonize(
            [
                Extension(
                    "heatflow._ckernels",
                    ["src/heatflow/_ckernels.pyx"],
                    include_dirs=[numpy.get_include()],
                    extra_compile_args=["-O3"],
                )
            ],
            compiler_directives={"language_level": "3"},
        )
    except ImportError:
        ext_modules = []

setup(ext_modules=ext_modules)

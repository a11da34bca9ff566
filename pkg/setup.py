"""Build script for the optional Cython Viterbi kernel.

The package works without the compiled extension; ``semcomm.baselines.viterbi``
falls back to a numpy implementation when ``_viterbi_ext`` cannot be imported.
"""
import os

import numpy as np
from setuptools import Extension, setup

ext_modules = []
if os.environ.get("SEMCOMM_NO_EXT") != "1":
    try:
        from Cython.Build import cythonize
    except ImportError:  # pragma: no cover
        cythonize = None
    if cythonize is not None:
        ext_modules = cythonize(
            [
                Extension(
                    "semcomm.baselines._viterbi_ext",
                    ["src/semcomm/baselines/_viterbi_ext.pyx"],
                    include_dirs=[np.get_include()],
                    extra_compile_args=["-O3"],
                )
            ],
            compiler_directives={"language_level": "3"},
        )

setup(ext_modules=ext_modules)

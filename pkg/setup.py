import os

import numpy as np
from setuptools import Extension, setup

ext_modules = []
if os.environ.get("APERIODIC_SPECTRUM_PURE_PYTHON", "") != "1":
    try:
        from Cython.Build import cythonize
    except ImportError:  # build the pure-Python package only
        cythonize = None
    if cythonize is not None:
        ext_modules = cythonize(
            [
                Extension(
                    "aperiodic_spectrum._kernels",
                    ["src/aperiodic_spectrum/_kernels.pyx"],
                    include_dirs=[np.get_include()],
                    extra_compile_args=["-O3"],
                )
            ],
            compiler_directives={"language_level": "3"},
        )

setup(ext_modules=ext_modules)

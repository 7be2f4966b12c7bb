import os

import numpy as np
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:  # pure-Python install; the kernel falls back at import
    cythonize = None

ext_modules = []
if cythonize is not None and not os.environ.get("HONESTSETS_NO_EXT"):
    ext_modules = cythonize(
        [
            Extension(
                "honestsets._cd_kernel",
                ["src/honestsets/_cd_kernel.pyx"],
                include_dirs=[np.get_include()],
                # no -ffast-math / -march=native: the fallback must match bit for bit
                extra_compile_args=["-O2", "-ffp-contract=off"],
            )
        ],
        compiler_directives={"language_level": "3", "boundscheck": False,
                             "wraparound": False, "cdivision": True},
    )

setup(ext_modules=ext_modules)

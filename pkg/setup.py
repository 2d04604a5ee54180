"""Build script for the compiled path-search kernel.

The package works without the extension (a pure-Python fallback is selected
at import time); building it just makes large catalog builds much faster.
"""

import numpy as np
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:  # pragma: no cover - build still works, pure fallback used
    ext_modules = []
else:
    ext_modules = cythonize(
        [
            Extension(
                "aevplan._kernels",
                ["src/aevplan/_kernels.pyx"],
                include_dirs=[np.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                extra_compile_args=["-O3"],
            )
        ],
        compiler_directives={"language_level": "3"},
    )

setup(ext_modules=ext_modules)

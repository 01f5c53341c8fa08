"""Build the optional compiled resampling kernel.

The package is fully functional without the extension (a vectorised numpy
fallback is selected at import time); building it just makes the hot remap
loop faster.  `-ffp-contract=off` keeps the compiled kernel bit-identical
to the fallback by preventing FMA contraction.
"""

from setuptools import Extension, setup

try:
    import numpy as np
    from Cython.Build import cythonize

    extensions = cythonize(
        [
            Extension(
                "dewarp._kernels._bicubic",
                sources=["src/dewarp/_kernels/_bicubic.pyx"],
                include_dirs=[np.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                extra_compile_args=["-O2", "-ffp-contract=off"],
            )
        ],
        compiler_directives={
            "boundscheck": False,
            "wraparound": False,
            "cdivision": True,
            "language_level": "3",
        },
    )
except ImportError:
    extensions = []

setup(ext_modules=extensions)

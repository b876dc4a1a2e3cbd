"""Build the optional Cython kernel for the embedding-layout SGD loop.

The package works without it (a pure-Python fallback is selected at import
time), so set FORMBENCH_SKIP_EXT=1 to install without a C toolchain.
"""

import os

from setuptools import setup

if os.environ.get("FORMBENCH_SKIP_EXT"):
    setup()
else:
    import numpy as np
    from Cython.Build import cythonize
    from setuptools import Extension

    extensions = [
        Extension(
            "formbench._kernels._sgd",
            sources=["src/formbench/_kernels/_sgd.pyx"],
            include_dirs=[np.get_include()],
            define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            # -ffp-contract=off keeps results bit-identical with the pure
            # Python fallback (no FMA fusion).
            extra_compile_args=["-O3", "-ffp-contract=off"],
        )
    ]

    setup(
        ext_modules=cythonize(
            extensions,
            compiler_directives={
                "boundscheck": False,
                "wraparound": False,
                "cdivision": True,
                "language_level": "3",
            },
        )
    )

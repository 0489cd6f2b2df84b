"""Build script for the optional compiled kernel.

The package is fully functional without the extension (a NumPy fallback is
selected at import time); the extension just makes the path-simulation hot
loop faster.  Set WINMART_NO_EXT=1 to skip building it.
"""

import os

from setuptools import Extension, setup

ext_modules = []
if not os.environ.get("WINMART_NO_EXT"):
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "winmart._backend._fastpath",
                sources=["src/winmart/_backend/_fastpath.pyx"],
                extra_compile_args=["-O3"],
            )
        ],
        compiler_directives={"language_level": "3"},
    )

setup(ext_modules=ext_modules)

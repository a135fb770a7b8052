"""Build hook for the optional compiled stepping kernel.

The package runs without it (kernels.py falls back to pure numpy), so any
build failure here only costs speed.  Set MZK_NO_EXT=1 to skip the build.
"""

import os

from setuptools import Extension, setup

ext_modules = []
if not os.environ.get("MZK_NO_EXT"):
    try:
        from Cython.Build import cythonize

        ext_modules = cythonize(
            [Extension("mzk._kernels", ["src/mzk/_kernels.pyx"],
                       extra_compile_args=["-O3", "-ffp-contract=off"])],
            language_level=3)
    except Exception as exc:
        print(f"skipping compiled kernel ({exc}); the pure numpy path will be used")

setup(ext_modules=ext_modules)

"""Build script: compiles the optional Cython kernel extension.

The extension is best effort.  If Cython or a C compiler is missing the
package installs anyway and falls back to the numpy kernels at import time.
Build in place with ``python setup.py build_ext --inplace``, or set
BOUSSINESQ_AFEM_NO_EXT=1 to skip the extension entirely.
"""

import os

from setuptools import Extension, setup

ext_modules = []
if os.environ.get("BOUSSINESQ_AFEM_NO_EXT") != "1":
    try:
        import numpy
        from Cython.Build import cythonize

        ext_modules = cythonize(
            [
                Extension(
                    "boussinesq_afem.kernels._core",
                    ["src/boussinesq_afem/kernels/_core.pyx"],
                    include_dirs=[numpy.get_include()],
                    define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                    extra_compile_args=["-O3"],
                    optional=True,
                )
            ],
            compiler_directives={"language_level": "3"},
        )
    except ImportError:
        ext_modules = []

setup(ext_modules=ext_modules)

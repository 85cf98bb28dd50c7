"""Build script for the optional compiled kernels.

The package works without the extension (a NumPy fallback is selected at
import time); compiling just makes the spectral solver's inner loop faster.
"""

from setuptools import Extension, setup

ext_modules = []
try:
    import numpy
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "echoaudit.kernels._residual_cy",
                ["src/echoaudit/kernels/_residual_cy.pyx"],
                include_dirs=[numpy.get_include()],
                extra_compile_args=["-O3"],
                optional=True,
            )
        ],
        compiler_directives={"language_level": "3"},
    )
except ImportError:
    pass

setup(ext_modules=ext_modules)

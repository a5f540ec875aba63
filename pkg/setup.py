"""Build script: compiles the optional Cython decoding kernels.

The extension is marked optional; if Cython or a C compiler is missing the
install proceeds and the package falls back to the pure numpy kernels in
``cliqueseg._kernels_py`` (selected at import time by ``cliqueseg.kernels``).
"""

from setuptools import Extension, setup

ext_modules = []
try:
    from Cython.Build import cythonize

    ext = Extension(
        "cliqueseg._kernels",
        ["src/cliqueseg/_kernels.pyx"],
        extra_compile_args=["-O3"],
    )
    ext.optional = True
    ext_modules = cythonize([ext], language_level=3)
except ImportError:
    pass

setup(ext_modules=ext_modules)

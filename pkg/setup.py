"""Build script: compiles the optional moment-sum extension when Cython is
available; the package falls back to the numpy kernels otherwise."""

from setuptools import setup

try:
    from Cython.Build import cythonize
    import numpy as np

    ext_modules = cythonize("src/usqz/_moments.pyx", language_level=3)
    include_dirs = [np.get_include()]
except ImportError:
    ext_modules = []
    include_dirs = []

setup(ext_modules=ext_modules, include_dirs=include_dirs)

"""Build script: compiles the Cython kernel extension when possible.

The package works without the extension (a numpy fallback is selected at
import time), so any compilation failure degrades to a pure-Python install
instead of aborting.
"""

from setuptools import Extension, setup


def _extensions():
    try:
        import numpy
        from Cython.Build import cythonize
    except ImportError:
        return []
    ext = Extension(
        "flashcap._kernels",
        sources=["src/flashcap/_kernels.pyx"],
        include_dirs=[numpy.get_include()],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
    )
    try:
        return cythonize([ext], language_level=3)
    except Exception:
        return []


setup(ext_modules=_extensions())

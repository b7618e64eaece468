"""Build script for the optional compiled event engine.

The package works without the extension (a pure-Python engine with
identical semantics is selected at import time), so the extension is
marked optional and a failed compile does not fail the install.
"""

from setuptools import Extension, setup

try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "kpzlab._engine",
                sources=["src/kpzlab/_engine.pyx"],
                optional=True,
            )
        ],
        compiler_directives={
            "language_level": "3",
            "boundscheck": False,
            "wraparound": False,
            "cdivision": True,
        },
    )
except ImportError:
    ext_modules = []

setup(ext_modules=ext_modules)

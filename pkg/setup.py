"""Builds the optional compiled distance kernel.

The package is fully functional without it: ``twinner._kernels`` falls back
to the numpy implementation when the extension is absent.  Set
``TWINNER_PURE_PYTHON=1`` at build time to skip compilation entirely.
"""

import os

from setuptools import setup

ext_modules = []
if os.environ.get("TWINNER_PURE_PYTHON") != "1":
    try:
        from Cython.Build import cythonize
        from setuptools import Extension

        ext_modules = cythonize(
            [
                Extension(
                    "twinner._kernels.geo_cy",
                    ["src/twinner/_kernels/geo_cy.pyx"],
                    extra_compile_args=["-O3"],
                )
            ],
            compiler_directives={
                "language_level": 3,
                "boundscheck": False,
                "wraparound": False,
                "cdivision": True,
            },
        )
    except ImportError:
        ext_modules = []

setup(ext_modules=ext_modules)

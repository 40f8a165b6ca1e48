"""Build script for the optional compiled correlator kernel.

The package works without the extension (a numpy reference kernel is
selected at import time); building it just makes large-L quenches faster.
"""

from setuptools import setup

try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        ["src/taclab/_kernels/_corr_cy.pyx"],
        compiler_directives={"language_level": "3"},
    )
except ImportError:
    ext_modules = []

setup(ext_modules=ext_modules)

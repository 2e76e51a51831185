"""Build script for the compiled trellis kernel.

The extension is optional at runtime: logitgop.align falls back to a pure
numpy kernel when the compiled module is missing, so a failed build does
not break the package (it only loses speed).
"""

import os

from setuptools import Extension, setup
from Cython.Build import cythonize

EXT_MODULES = cythonize(
    [
        Extension(
            "logitgop.align._trellis",
            [os.path.join("src", "logitgop", "align", "_trellis.pyx")],
        )
    ],
    language_level=3,
)

setup(ext_modules=EXT_MODULES)

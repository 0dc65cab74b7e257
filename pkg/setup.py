"""Build script for the optional compiled kernel module.

The package is fully functional without the extension: ``lightgrating.backend``
falls back to the NumPy implementation when ``lightgrating._kernels`` is not
importable.  Building from a checkout therefore tolerates a missing Cython.
"""

from setuptools import setup

try:
    import numpy
    from Cython.Build import cythonize
    from setuptools.extension import Extension

    extensions = cythonize(
        [
            Extension(
                "lightgrating._kernels",
                ["src/lightgrating/_kernels.pyx"],
                include_dirs=[numpy.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        language_level=3,
    )
except ImportError:
    extensions = []

setup(ext_modules=extensions)

import numpy
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "hspredict._kernels_c",
                ["src/hspredict/_kernels_c.pyx"],
                extra_compile_args=["-O3"],
                include_dirs=[numpy.get_include()],
            )
        ],
        language_level=3,
    )
except ImportError:
    # No Cython available: the package still works on the pure-NumPy kernels.
    ext_modules = []

setup(ext_modules=ext_modules)

from setuptools import Extension, setup

import numpy as np

try:
    from Cython.Build import cythonize
except ImportError:
    cythonize = None

# The compiled kernel core is optional: if it cannot be built the package
# falls back to the numpy implementation selected in portarng._kernels.
ext_modules = []
if cythonize is not None:
    ext_modules = cythonize(
        [
            Extension(
                "portarng._kernels._core",
                ["src/portarng/_kernels/_core.pyx"],
                include_dirs=[np.get_include()],
                extra_compile_args=["-O3"],
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

setup(ext_modules=ext_modules)

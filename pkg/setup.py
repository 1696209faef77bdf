import numpy
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    cythonize = None

ext_modules = []
if cythonize is not None:
    ext_modules = cythonize(
        [
            Extension(
                "ltrack._kernels._core",
                ["src/ltrack/_kernels/_core.pyx"],
                include_dirs=[numpy.get_include()],
                extra_compile_args=["-O3"],
                # the package works without the extension (pure-Python fallback)
                optional=True,
            )
        ],
        language_level=3,
    )

setup(ext_modules=ext_modules)

import os

from setuptools import Extension, setup

ext_modules = []
if not os.environ.get("RIDEPOOL_NO_EXT"):
    try:
        from Cython.Build import cythonize
    except ImportError:
        cythonize = None
    if cythonize is not None:
        ext_modules = cythonize(
            [
                Extension(
                    "ridepool._core",
                    ["src/ridepool/_core.pyx"],
                    language="c++",
                    # no -ffast-math: results must stay bit-identical to the Python fallback
                    extra_compile_args=["-O3", "-std=c++17"],
                )
            ],
            compiler_directives={"language_level": "3"},
        )

setup(ext_modules=ext_modules)

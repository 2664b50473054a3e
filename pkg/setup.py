"""Build script: compiles the optional accelerator extension.

The package is fully functional without the extension; edgefabric.kernels
falls back to the pure-Python implementation when the compiled module is
missing (or when EDGEFABRIC_PURE_PYTHON=1).
"""

from setuptools import setup

ext_modules = []
try:
    from Cython.Build import cythonize
    from setuptools import Extension

    ext_modules = cythonize(
        [
            Extension(
                "edgefabric.kernels._core",
                ["src/edgefabric/kernels/_core.pyx"],
                # No -ffast-math: both backends must produce bit-identical
                # floats so simulation output does not depend on the backend.
                extra_compile_args=["-O2"],
            )
        ],
        compiler_directives={"language_level": "3"},
    )
except ImportError:
    pass

setup(ext_modules=ext_modules)

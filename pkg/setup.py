import os

from setuptools import setup

ext_modules = []
if os.environ.get("EXECRISK_NO_EXT") != "1":
    try:
        import numpy as np
        from Cython.Build import cythonize
        from setuptools import Extension

        ext_modules = cythonize(
            [
                Extension(
                    "execrisk._kernels._ckernel",
                    ["src/execrisk/_kernels/_ckernel.pyx"],
                    include_dirs=[np.get_include()],
                    define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                    # no fast-math or FMA contraction: results must match the numpy path
                    extra_compile_args=["-O2", "-fopenmp", "-ffp-contract=off"],
                    extra_link_args=["-fopenmp"],
                )
            ],
            compiler_directives={"language_level": "3"},
        )
    except ImportError:
        ext_modules = []

setup(ext_modules=ext_modules)

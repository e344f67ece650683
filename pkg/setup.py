import os

from setuptools import Extension, setup

extensions = []
if os.environ.get("SPARSEJL_NO_EXT") != "1":
    try:
        import numpy
        from Cython.Build import cythonize
    except ImportError:
        pass
    else:
        extensions = cythonize(
            [
                Extension(
                    "sparsejl._kernels",
                    ["src/sparsejl/_kernels.pyx"],
                    include_dirs=[numpy.get_include()],
                    define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                    extra_compile_args=["-O3", "-ffp-contract=off"],
                )
            ],
            compiler_directives={"language_level": "3", "embedsignature": True},
        )

setup(ext_modules=extensions)

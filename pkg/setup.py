import numpy
from setuptools import Extension, setup
from Cython.Build import cythonize

# -ffp-contract=off keeps the compiled engine bit-identical to the pure-Python
# reference engine: FMA contraction would change rounding of a*b+c chains.
extensions = [
    Extension(
        "sbmlab.particle._core",
        ["src/sbmlab/particle/_core.pyx"],
        include_dirs=[numpy.get_include()],
        extra_compile_args=["-O3", "-ffp-contract=off"],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
    )
]

setup(ext_modules=cythonize(extensions, language_level=3))

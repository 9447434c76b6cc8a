import os

import numpy
from Cython.Build import cythonize
from setuptools import Extension, setup

# random_multinomial / random_normal live in numpy's static npyrandom library
npyrandom_dir = os.path.join(numpy.get_include(), "..", "..", "random", "lib")

extensions = [
    Extension(
        "bprelab._kernel",
        ["src/bprelab/_kernel.pyx"],
        include_dirs=[numpy.get_include()],
        library_dirs=[npyrandom_dir],
        libraries=["npyrandom"],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
        extra_compile_args=["-O3"],
    )
]

setup(ext_modules=cythonize(extensions, language_level=3))

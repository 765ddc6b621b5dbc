import numpy as np
from setuptools import Extension, setup
from Cython.Build import cythonize

ext_modules = cythonize(
    [
        Extension(
            "imidyn._kernels._mc_cy",
            ["src/imidyn/_kernels/_mc_cy.pyx"],
            include_dirs=[np.get_include()],
        )
    ],
    language_level="3",
)

setup(ext_modules=ext_modules)

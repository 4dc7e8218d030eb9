import numpy as np
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize

    extensions = cythonize(
        [
            Extension(
                "voiceid.kernels._lstm_cy",
                ["src/voiceid/kernels/_lstm_cy.pyx"],
                include_dirs=[np.get_include()],
                extra_compile_args=["-O3"],
            )
        ],
        compiler_directives={"language_level": "3"},
    )
except ImportError:
    # No Cython: the package still works on the numpy kernel.
    extensions = []

setup(ext_modules=extensions)

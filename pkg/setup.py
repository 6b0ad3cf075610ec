from setuptools import Extension, setup

try:
    from Cython.Build import cythonize

    extensions = cythonize(
        [
            Extension(
                "stosym._kernels",
                ["src/stosym/_kernels.pyx"],
                extra_compile_args=["-O3"],
            )
        ],
        compiler_directives={"language_level": "3"},
    )
except ImportError:
    # The compiled core is optional; the package falls back to the
    # pure-Python kernels at import time.
    extensions = []

setup(ext_modules=extensions)

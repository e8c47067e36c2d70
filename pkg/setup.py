from Cython.Build import cythonize
from setuptools import Extension, setup

setup(
    ext_modules=cythonize(
        [Extension("mrspeed._ckernel", ["src/mrspeed/_ckernel.pyx"])],
        compiler_directives={"language_level": "3"},
    ),
)

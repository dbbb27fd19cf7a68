"""Build the optional compiled series kernel; installs fine without it."""
import numpy
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:  # numpy fallback will be used
    ext_modules = []
else:
    ext_modules = cythonize(
        [Extension("ptscat._accel", ["src/ptscat/_accel.pyx"],
                   include_dirs=[numpy.get_include()])],
        language_level=3,
    )

setup(ext_modules=ext_modules)

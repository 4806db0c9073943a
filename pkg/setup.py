"""Build script for the optional compiled scan kernels.

The package is pure Python by default.  When Cython and a C compiler are
available, the record-scanning hot loops are compiled as
``draftvault._kernels._scan_c``; otherwise the pure-Python twin in
``draftvault._kernels._scan_py`` is used at import time.

Build in place for development:

    python setup.py build_ext --inplace
"""
from setuptools import Extension, setup

ext_modules = []
try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "draftvault._kernels._scan_c",
                ["src/draftvault/_kernels/_scan.pyx"],
                libraries=["z"],
                extra_compile_args=["-O2"],
            )
        ],
        language_level="3",
    )
except ImportError:
    # No Cython available: install as pure Python, fallback kernels take over.
    pass

setup(ext_modules=ext_modules)

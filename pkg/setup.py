"""Build script: compiles the accumulation kernels when Cython and a C
compiler are available, otherwise installs pure-Python only (the package
falls back to its NumPy kernels at import time)."""

import warnings

from setuptools import setup
from setuptools.command.build_ext import build_ext


def extension_modules():
    try:
        import numpy as np
        from Cython.Build import cythonize
        from setuptools import Extension
    except ImportError as exc:
        warnings.warn(f"building without compiled kernels: {exc}")
        return []
    return cythonize(
        [
            Extension(
                "hoyerstream._kernels",
                ["src/hoyerstream/_kernels.pyx"],
                include_dirs=[np.get_include()],
            )
        ]
    )


class optional_build_ext(build_ext):
    """Let the install proceed with the NumPy fallback if compilation fails."""

    def run(self):
        try:
            super().run()
        except Exception as exc:
            warnings.warn(f"compiled kernels unavailable, using NumPy fallback: {exc}")

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:
            warnings.warn(f"compiled kernels unavailable, using NumPy fallback: {exc}")


setup(ext_modules=extension_modules(), cmdclass={"build_ext": optional_build_ext})

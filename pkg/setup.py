"""Build script: compiles the optional stencil-kernel extension.

The package works without the extension (a numpy fallback is selected at
import time), so any compiler failure downgrades to a warning instead of
aborting the install.
"""

import sys

from setuptools import setup
from setuptools.command.build_ext import build_ext


def make_extensions():
    import numpy
    from Cython.Build import cythonize
    from setuptools import Extension

    ext = Extension(
        "dweuler._kernels._cykernels",
        ["src/dweuler/_kernels/_cykernels.pyx"],
        include_dirs=[numpy.get_include()],
        # -ffp-contract=off keeps the C arithmetic bit-identical to the
        # numpy backend (no FMA contraction).
        extra_compile_args=["-O3", "-ffp-contract=off"],
    )
    return cythonize([ext], compiler_directives={"language_level": "3"})


class OptionalBuildExt(build_ext):
    """Build the extension if possible; fall back to pure numpy otherwise."""

    def run(self):
        try:
            super().run()
        except Exception as exc:  # compiler/toolchain missing
            self._warn(exc)

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:
            self._warn(exc)

    @staticmethod
    def _warn(exc):
        print(
            f"WARNING: building the compiled kernels failed ({exc!r}); "
            "dweuler will use the numpy backend.",
            file=sys.stderr,
        )


setup(ext_modules=make_extensions(), cmdclass={"build_ext": OptionalBuildExt})

"""Build script: compiles the optional Runge-Kutta core extension.

The extension is a pure speedup; if Cython or a C compiler is missing the
build degrades to the pure-Python kernel with a warning instead of failing.
-ffp-contract=off keeps the compiled arithmetic bit-compatible with the
Python twin (no fused multiply-adds).
"""

import sys
import warnings

from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext as _build_ext


class optional_build_ext(_build_ext):
    def run(self):
        try:
            super().run()
        except Exception as exc:  # missing compiler / headers
            self._skip(exc)

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:
            self._skip(exc)

    @staticmethod
    def _skip(exc):
        warnings.warn(
            f"building the compiled kernel failed ({exc}); "
            "falling back to the pure-Python kernel"
        )


def extensions():
    try:
        import numpy
        from Cython.Build import cythonize
    except ImportError as exc:
        warnings.warn(f"compiled kernel not built ({exc}); pure-Python fallback only")
        return []
    compile_args = ["-O3"]
    if not sys.platform.startswith("win"):
        compile_args.append("-ffp-contract=off")
    ext = Extension(
        "resokit._rkcore",
        ["src/resokit/_rkcore.pyx"],
        include_dirs=[numpy.get_include()],
        extra_compile_args=compile_args,
    )
    return cythonize([ext], language_level=3)


setup(ext_modules=extensions(), cmdclass={"build_ext": optional_build_ext})

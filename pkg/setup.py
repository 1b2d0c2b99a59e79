"""Build script: compiles the convex-envelope kernel when a C toolchain is
available and falls back to the pure-Python backend otherwise."""

import sys

from setuptools import setup
from setuptools.command.build_ext import build_ext


class OptionalBuildExt(build_ext):
    """Make the extension optional: the package selects a pure-Python
    backend at import time when the compiled module is missing."""

    def run(self):
        try:
            super().run()
        except Exception as exc:  # toolchain missing
            print(f"warning: skipping compiled envelope kernel ({exc})",
                  file=sys.stderr)

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:
            print(f"warning: could not build {ext.name} ({exc}); "
                  "pure-Python fallback will be used", file=sys.stderr)


try:
    from setuptools import Extension
    from Cython.Build import cythonize
    ext_modules = cythonize(
        [Extension("burgerslab._envelope_core",
                   ["src/burgerslab/_envelope_core.pyx"])],
        language_level=3,
    )
except ImportError:
    ext_modules = []

setup(
    ext_modules=ext_modules,
    cmdclass={"build_ext": OptionalBuildExt},
)

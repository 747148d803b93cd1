"""Build script: compiles the optional Cython kernel extension.

The package works without the extension (a numpy fallback is selected at
import time), so any compile failure downgrades to a warning instead of
aborting the install.  Set PGLOT_NO_EXT=1 to skip the build entirely.
"""

import os
import sys

from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext


class optional_build_ext(build_ext):
    def run(self):
        try:
            super().run()
        except Exception as exc:  # compiler missing, etc.
            self._warn(exc)

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:
            self._warn(exc)

    @staticmethod
    def _warn(exc):
        print(
            f"warning: building the pglot C kernels failed ({exc}); "
            "falling back to the pure-Python kernels",
            file=sys.stderr,
        )


ext_modules = []
cmdclass = {}
if os.environ.get("PGLOT_NO_EXT") != "1":
    try:
        from Cython.Build import cythonize

        ext_modules = cythonize(
            [
                Extension(
                    "pglot.kernels._ckern",
                    ["src/pglot/kernels/_ckern.pyx"],
                    extra_compile_args=["-O3"],
                )
            ],
            language_level=3,
        )
        cmdclass = {"build_ext": optional_build_ext}
    except ImportError:
        print("warning: Cython not available; installing without C kernels", file=sys.stderr)

setup(ext_modules=ext_modules, cmdclass=cmdclass)

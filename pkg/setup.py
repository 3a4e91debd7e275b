"""Build script for the compiled kernel extension.

The extension is optional: if the toolchain is missing the install still
succeeds and the package falls back to the pure NumPy kernels at import
time (see zsaction.kernels).
"""

from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext

from Cython.Build import cythonize

extensions = [
    Extension(
        "zsaction.kernels._native",
        ["src/zsaction/kernels/_native.pyx"],
        extra_compile_args=["-O3"],
    )
]


class optional_build_ext(build_ext):
    """Degrade to the pure backend instead of failing the install."""

    def run(self):
        try:
            super().run()
        except Exception as exc:  # noqa: BLE001
            self._skip(exc)

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:  # noqa: BLE001
            self._skip(exc)

    @staticmethod
    def _skip(exc):
        print(f"warning: compiled kernels not built ({exc}); "
              "the pure NumPy backend will be used")


setup(
    ext_modules=cythonize(extensions, language_level="3"),
    cmdclass={"build_ext": optional_build_ext},
)

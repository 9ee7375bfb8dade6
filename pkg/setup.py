# Build the optional Cython kernels. If compilation fails the package still
# installs and falls back to the numpy implementation at import time.
import sys

from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext


class OptionalBuildExt(build_ext):
    def run(self):
        try:
            super().run()
        except Exception as exc:  # noqa: BLE001
            print(f"warning: Cython kernels not built ({exc})", file=sys.stderr)

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:  # noqa: BLE001
            print(f"warning: failed to build {ext.name} ({exc})", file=sys.stderr)


def extensions():
    try:
        import numpy as np
        from Cython.Build import cythonize
    except ImportError:
        return []
    ext = Extension(
        "robot_vitals._kernels._ckernels",
        ["src/robot_vitals/_kernels/_ckernels.pyx"],
        include_dirs=[np.get_include()],
        extra_compile_args=["-O3"],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
    )
    return cythonize([ext], compiler_directives={"language_level": "3"})


setup(ext_modules=extensions(), cmdclass={"build_ext": OptionalBuildExt})

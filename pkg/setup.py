"""Build script: compiles the hot simulation kernel as a C extension.

The kernel source (src/gfmsim/_kernel.py) is written in Cython "pure
Python" mode, so the package still works without the extension -- the
same file then runs as plain Python, just slower.  Build failures are
therefore non-fatal.
"""

from setuptools import setup, Extension
from setuptools.command.build_ext import build_ext


class OptionalBuildExt(build_ext):
    """Build the kernel extension if possible, warn and continue if not."""

    def run(self):
        try:
            super().run()
        except Exception as exc:  # pragma: no cover - depends on toolchain
            print(f"WARNING: kernel extension build failed ({exc}); "
                  "falling back to the pure-Python kernel.")

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:  # pragma: no cover
            print(f"WARNING: building {ext.name} failed ({exc}); "
                  "falling back to the pure-Python kernel.")


def extensions():
    try:
        from Cython.Build import cythonize
    except ImportError:  # pragma: no cover
        return []
    ext = Extension("gfmsim._kernel", ["src/gfmsim/_kernel.py"])
    return cythonize(
        [ext],
        compiler_directives={
            "language_level": "3",
            "boundscheck": False,
            "wraparound": False,
            "cdivision": True,
            "initializedcheck": False,
        },
    )


setup(ext_modules=extensions(), cmdclass={"build_ext": OptionalBuildExt})

"""Build hook: compiles the shooting propagator extension when Cython and a
C compiler are available. The package works without it (pure-Python
propagator); the extension is an optional fast path."""
import os

from setuptools import Extension, setup

ext_modules = []
if os.environ.get("GEOBALL_NO_EXT") != "1":
    try:
        from Cython.Build import cythonize

        ext = Extension(
            "geoball._shootcore",
            ["src/geoball/_shootcore.pyx"],
            # contraction off so compiled steps match the Python reference
            # propagator bit for bit
            extra_compile_args=["-O2", "-ffp-contract=off"],
        )
        ext_modules = cythonize(
            [ext], compiler_directives={"language_level": "3"})
    except ImportError:
        ext_modules = []

setup(ext_modules=ext_modules)

import os

from setuptools import Extension, setup

ext_modules = []
if not os.environ.get("LATENTSHIELD_NO_EXT"):
    try:
        from Cython.Build import cythonize

        ext_modules = cythonize(
            [Extension("latentshield._gamma_ext", ["src/latentshield/_gamma_ext.pyx"])],
            language_level="3",
            compiler_directives={"boundscheck": False, "wraparound": False, "cdivision": True},
        )
    except ImportError:
        ext_modules = []

setup(ext_modules=ext_modules)

import os
import sys

from setuptools import Extension, setup

ext_modules = []
if not os.environ.get("VORTEXZONE_NO_EXTENSION"):
    try:
        import numpy as np
        from Cython.Build import cythonize
    except ImportError:
        sys.stderr.write("Cython or NumPy missing; installing the pure-Python kernels only\n")
    else:
        extra = [] if sys.platform == "win32" else ["-O3", "-ffp-contract=off"]
        ext_modules = cythonize(
            [
                Extension(
                    "vortexzone._kernels",
                    ["src/vortexzone/_kernels.pyx"],
                    include_dirs=[np.get_include()],
                    define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                    extra_compile_args=extra,
                )
            ],
            language_level=3,
        )

setup(ext_modules=ext_modules)

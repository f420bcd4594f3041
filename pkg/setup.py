import os

from setuptools import Extension, setup

ext_modules = []
if not os.environ.get("REDLISTSIM_PURE_PYTHON"):
    try:
        import numpy as np
        from Cython.Build import cythonize
    except ImportError:
        pass
    else:
        ext_modules = cythonize(
            [
                Extension(
                    "redlistsim._kernels.race_ext",
                    ["src/redlistsim/_kernels/race_ext.pyx"],
                    include_dirs=[np.get_include()],
                    extra_compile_args=["-O3"],
                )
            ],
            compiler_directives={"language_level": "3"},
        )

setup(ext_modules=ext_modules)

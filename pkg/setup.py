import numpy as np
from Cython.Build import cythonize
from setuptools import Extension, setup

extensions = [
    Extension(
        "soundfield.kernels._fdtd",
        ["src/soundfield/kernels/_fdtd.pyx"],
        include_dirs=[np.get_include()],
        # fp-contract off: the compiled kernel must be bit-identical to the
        # numpy fallback, so FMA fusion is disabled.
        extra_compile_args=["-O3", "-ffp-contract=off"],
    )
]

setup(
    ext_modules=cythonize(
        extensions,
        compiler_directives={"language_level": "3"},
    )
)

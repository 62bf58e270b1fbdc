from setuptools import Extension, setup

# The compiled rasterizer kernels are optional: the package falls back to a
# pure-numpy implementation at import time if the extension is missing.
try:
    from Cython.Build import cythonize

    # -ffp-contract=off keeps the compiler from fusing multiply-adds, so the
    # compiled kernels agree with the numpy fallback operation for operation.
    ext_modules = cythonize(
        [
            Extension(
                "satsplat.splat._kernels",
                ["src/satsplat/splat/_kernels.pyx"],
                extra_compile_args=["-O3", "-ffp-contract=off"],
            )
        ],
        language_level=3,
    )
except ImportError:
    ext_modules = []

setup(ext_modules=ext_modules)

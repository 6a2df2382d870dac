from setuptools import Extension, setup

try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [Extension("codediv._gst", ["src/codediv/_gst.pyx"])],
        compiler_directives={"language_level": "3"},
    )
except ImportError:
    # Pure-Python install; codediv.similarity falls back to codediv._gst_py.
    print("Cython not available; building codediv without the compiled GST kernel.")
    ext_modules = []

setup(ext_modules=ext_modules)

"""Builds the pybind11 extension through the project's CMake tree."""

import os
import subprocess
import sys
from pathlib import Path

from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext


class CMakeExtension(Extension):
    def __init__(self, name):
        super().__init__(name, sources=[])


class CMakeBuild(build_ext):
    def build_extension(self, ext):
        extdir = Path(self.get_ext_fullpath(ext.name)).resolve().parent
        build_dir = Path(self.build_temp) / "cmake"
        build_dir.mkdir(parents=True, exist_ok=True)

        cfg = "Debug" if self.debug else "Release"
        source_dir = Path(__file__).resolve().parent
        cmake_args = [
            f"-DCMAKE_LIBRARY_OUTPUT_DIRECTORY={extdir}",
            f"-DPython3_EXECUTABLE={sys.executable}",
            f"-DCMAKE_BUILD_TYPE={cfg}",
            "-DSKBUILD=ON",
        ]
        subprocess.run(
            ["cmake", str(source_dir), *cmake_args], cwd=build_dir, check=True
        )
        subprocess.run(
            ["cmake", "--build", ".", "--target", "_core",
             f"-j{os.cpu_count() or 2}"],
            cwd=build_dir,
            check=True,
        )


setup(
    ext_modules=[CMakeExtension("autosmart._core")],
    cmdclass={"build_ext": CMakeBuild},
)

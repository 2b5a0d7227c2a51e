import shutil
import subprocess
import sys
from pathlib import Path

from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext


class CMakeExtension(Extension):
    def __init__(self, name):
        super().__init__(name, sources=[])


class CMakeBuild(build_ext):
    """Drives the CMake build and drops the extension where setuptools
    expects it. Only the _core target is built; tests stay with ctest."""

    def build_extension(self, ext):
        source_dir = Path(__file__).resolve().parent
        build_dir = Path(self.build_temp).resolve() / "cmake"
        build_dir.mkdir(parents=True, exist_ok=True)
        dest_dir = Path(self.get_ext_fullpath(ext.name)).resolve().parent
        dest_dir.mkdir(parents=True, exist_ok=True)

        configure = [
            "cmake",
            "-S", str(source_dir),
            "-B", str(build_dir),
            "-DCMAKE_BUILD_TYPE=Release",
            "-DRADARFUSE_BUILD_TESTS=OFF",
            "-DRADARFUSE_BUILD_PYTHON=ON",
            f"-DPython3_EXECUTABLE={sys.executable}",
        ]
        try:
            import pybind11

            configure.append(f"-Dpybind11_DIR={pybind11.get_cmake_dir()}")
        except ImportError:
            pass
        subprocess.run(configure, check=True)
        subprocess.run(
            ["cmake", "--build", str(build_dir), "--target", "_core", "--parallel"],
            check=True,
        )

        staged = build_dir / "python" / "radarfuse"
        modules = sorted(staged.glob("_core*"))
        if not modules:
            raise RuntimeError(f"no extension module produced under {staged}")
        for module in modules:
            if module.suffix in {".so", ".pyd", ".dylib"} or ".so." in module.name:
                shutil.copy2(module, dest_dir / module.name)


setup(
    ext_modules=[CMakeExtension("radarfuse._core")],
    cmdclass={"build_ext": CMakeBuild},
)

"""Builds the Rust extension module through cargo.

Install in editable mode from the workspace root with

    pip install -e python --no-build-isolation
"""

import shutil
import subprocess
import sys
from pathlib import Path

from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext

WORKSPACE_ROOT = Path(__file__).resolve().parent.parent
LIB_STEM = "certrom_py"


def built_library_path() -> Path:
    if sys.platform == "darwin":
        name = f"lib{LIB_STEM}.dylib"
    elif sys.platform == "win32":
        name = f"{LIB_STEM}.dll"
    else:
        name = f"lib{LIB_STEM}.so"
    return WORKSPACE_ROOT / "target" / "release" / name


class CargoExtension(Extension):
    def __init__(self) -> None:
        super().__init__(LIB_STEM, sources=[])


class CargoBuildExt(build_ext):
    def build_extension(self, ext: Extension) -> None:
        subprocess.run(
            [
                "cargo",
                "build",
                "--release",
                "-p",
                "certrom-py",
                "--features",
                "extension-module",
            ],
            cwd=WORKSPACE_ROOT,
            check=True,
        )
        destination = Path(self.get_ext_fullpath(ext.name))
        destination.parent.mkdir(parents=True, exist_ok=True)
        shutil.copyfile(built_library_path(), destination)


setup(
    ext_modules=[CargoExtension()],
    cmdclass={"build_ext": CargoBuildExt},
)

"""Load each given module file; the library core must not pull in the CLI."""

import sys
import traceback
from importlib.machinery import SourceFileLoader
from pathlib import Path

SHELL_PACKAGE = "mobility_stress.cli"

if __name__ == "__main__":
    files = sys.argv[1:]
    has_failure = False
    for file in files:
        try:
            SourceFileLoader("x", file).load_module()
        except Exception:
            has_failure = True
            print(file)  # noqa: T201
            traceback.print_exc()
            print()  # noqa: T201
            continue
        if "cli" not in Path(file).parts and SHELL_PACKAGE in Path(file).read_text():
            has_failure = True
            print(f"{file}: imports {SHELL_PACKAGE}")  # noqa: T201

    sys.exit(1 if has_failure else 0)

#!/usr/bin/env python3
"""Write the bundled example machines as JSON files into corpus/."""

import os
import sys

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

from xducer.corpus import MUL_LAYERS, all_machines  # noqa: E402
from xducer.machine_io import emit_machine  # noqa: E402


def main() -> None:
    here = os.path.dirname(os.path.abspath(__file__))
    target = os.path.join(here, "..", "corpus")
    os.makedirs(target, exist_ok=True)
    for name, machine in sorted(all_machines().items()):
        layers = MUL_LAYERS if name == "mul_sst" else None
        path = os.path.join(target, "%s.json" % name)
        emit_machine(machine, path, layers=layers)
        print("wrote", os.path.relpath(path))


if __name__ == "__main__":
    main()

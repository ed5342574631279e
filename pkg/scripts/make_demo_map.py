"""Write the bundled demo maps to disk.

Usage: python scripts/make_demo_map.py [OUT_DIR]
"""

import sys
from pathlib import Path

from scenesynth.fixtures import generate_map_fixture
from scenesynth.maps import save_map


def main() -> None:
    out_dir = Path(sys.argv[1]) if len(sys.argv) > 1 else Path("maps")
    out_dir.mkdir(parents=True, exist_ok=True)
    for city in ("MIA", "PIT"):
        path = out_dir / f"demo_{city.lower()}.map"
        save_map(generate_map_fixture("corridors", city), path)
        print(f"wrote {path}")


if __name__ == "__main__":
    main()

"""End-to-end demo: maps -> scenes -> masked samples -> analysis tables.

Usage: python scripts/demo_pipeline.py [WORK_DIR] [N_SCENES]

Everything lands under WORK_DIR (default demo_run/); rerunning reuses
already-generated scenes and rewrites nothing that has not changed.
"""

import sys
from pathlib import Path

from scenesynth.cli import main as cli


def main() -> None:
    work = Path(sys.argv[1]) if len(sys.argv) > 1 else Path("demo_run")
    n_scenes = int(sys.argv[2]) if len(sys.argv) > 2 else 50
    work.mkdir(parents=True, exist_ok=True)

    from scenesynth.fixtures import generate_map_fixture
    from scenesynth.maps import save_map

    maps = []
    for city in ("MIA", "PIT"):
        path = work / f"demo_{city.lower()}.map"
        save_map(generate_map_fixture("corridors", city), path)
        maps.append(str(path))

    cfg = work / "run.cfg"
    cfg.write_text(
        "seed = 7\n"
        f"n_scenes = {n_scenes}\n"
        f"output_dir = {work / 'scenes'}\n"
        f"map_files = {', '.join(maps)}\n"
    )

    steps = [
        ["generate", "--config", str(cfg), "--workers", "2"],
        ["validate", "--scenes", str(work / "scenes")],
        ["mask", "--scenes", str(work / "scenes"), "--task", "combined",
         "--seed", "11", "--out", str(work / "samples")],
        ["stats", "--scenes", str(work / "scenes"), "--ref", str(work / "scenes"),
         "--out", str(work / "stats")],
        ["plot", "--scenes", str(work / "scenes"), "--out", str(work / "plots"),
         "--svg"],
    ]
    for argv in steps:
        print(f"\n$ scenesynth {' '.join(argv)}")
        code = cli(argv)
        if code != 0:
            sys.exit(code)
    print(f"\ndemo complete under {work}/")


if __name__ == "__main__":
    main()

"""Stub documenting how Argoverse-style HD maps translate to our schema.

The conversion itself is out of scope for this package; this file records
the field mapping so anyone with the upstream map API can produce our
line-oriented format:

    our schema            Argoverse-style source
    ----------            ----------------------
    city <tag>            city name, e.g. MIA / PIT
    lane <id>             lane segment id (stringified)
    pt <x> <y>            lane centerline vertices, city frame, meters
    succ <id>             each successor lane id
    pred <id>             each predecessor lane id

One `lane` record per lane segment; vertex order follows travel
direction; write coordinates with at least 6 significant digits (we emit
9 decimals). Successor endpoints must touch their predecessor's last
vertex to within 0.5 m or validation rejects the file.
"""

import sys


def main() -> None:
    sys.exit(
        "not implemented: this stub only documents the field mapping "
        "(see the module docstring)"
    )


if __name__ == "__main__":
    main()

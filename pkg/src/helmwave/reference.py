"""Published GMRES iteration counts used for reproduction sweeps.

Each table maps (n, m) for flat ``m x m`` decompositions, or (n, ell) for
``ell`` levels of 2x2, to (finest-level coarse counts, iteration counts).
"""
from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class ReferenceTable:
    name: str
    problem: str
    hierarchical: bool
    cells: dict
    c0: float = 1.0
    nlayers: int = 1

    def levels(self, m_or_ell: int) -> str:
        if self.hierarchical:
            return ",".join(["2x2"] * m_or_ell)
        return f"{m_or_ell}x{m_or_ell}"


def _cells(rows):
    out = {}
    for n, entries in rows.items():
        for key, nc, it in entries:
            out[(n, key)] = (nc, it)
    return out


TABLE1 = ReferenceTable(
    "table1",
    "free",
    False,
    _cells(
        {
            4: [(2, (0, 2, 3, 4), (6, 5, 4, 3)), (4, (0, 4, 5, 6), (15, 8, 4, 3)),
                (8, (0, 6, 7, 8), (32, 6, 4, 3)), (16, (0, 6, 7, 8), (61, 8, 4, 3))],
            8: [(2, (0, 1, 5, 7), (7, 9, 5, 3)), (4, (0, 10, 11, 13), (17, 8, 5, 3)),
                (8, (0, 11, 13, 14), (34, 6, 4, 3)), (16, (0, 11, 13, 14), (63, 7, 4, 3))],
            16: [(2, (0, 11, 12, 13), (9, 7, 6, 3)), (4, (0, 19, 23, 25), (20, 6, 4, 3)),
                 (8, (0, 21, 23, 25), (39, 6, 4, 3)), (16, (0, 22, 24, 25), (78, 6, 4, 3))],
            32: [(2, (0, 27, 28, 29), (10, 5, 4, 3)), (4, (0, 39, 43, 47), (22, 6, 4, 3)),
                 (8, (0, 42, 45, 48), (48, 6, 4, 3)), (16, (0, 43, 45, 49), (92, 6, 4, 3))],
        }
    ),
)

TABLE2 = ReferenceTable(
    "table2",
    "free",
    True,
    _cells(
        {
            4: [(1, (0, 2, 3, 4), (6, 5, 4, 3)), (2, (0, 3, 4, 5), (15, 7, 4, 3)),
                (3, (0, 4, 5, 6), (32, 7, 4, 3)), (4, (0, 4, 5, 6), (61, 9, 4, 3))],
            8: [(1, (0, 1, 5, 7), (7, 9, 5, 3)), (2, (0, 6, 7, 8), (17, 8, 5, 3)),
                (3, (0, 7, 8, 9), (34, 7, 4, 3)), (4, (0, 7, 8, 9), (63, 14, 6, 3))],
            16: [(1, (0, 11, 12, 13), (9, 7, 6, 3)), (2, (0, 13, 14, 15), (20, 7, 5, 3)),
                 (3, (0, 15, 16, 17), (39, 5, 4, 3)), (4, (0, 15, 16, 17), (78, 7, 5, 3))],
            32: [(1, (0, 27, 28, 29), (10, 5, 4, 3)), (2, (0, 29, 30, 31), (22, 6, 4, 3)),
                 (3, (0, 31, 32, 33), (48, 5, 4, 3)), (4, (0, 32, 33, 34), (92, 5, 4, 3))],
        }
    ),
)

TABLE3 = ReferenceTable(
    "table3",
    "layered",
    False,
    _cells(
        {
            4: [(2, (0, 2, 3, 4), (7, 5, 4, 3)), (4, (0, 4, 5, 6), (19, 6, 4, 3)),
                (8, (0, 4, 5, 7), (60, 10, 5, 3)), (16, (0, 6, 7, 8), (103, 6, 4, 3))],
            8: [(2, (0, 4, 5, 6), (12, 5, 4, 3)), (4, (0, 9, 10, 11), (34, 5, 4, 3)),
                (8, (0, 10, 11, 13), (47, 8, 4, 3)), (16, (0, 11, 12, 13), (154, 6, 5, 3))],
            16: [(2, (0, 9, 10, 11), (16, 5, 4, 3)), (4, (0, 17, 19, 20), (27, 5, 4, 3)),
                 (8, (0, 19, 21, 22), (81, 5, 4, 3)), (16, (0, 22, 23, 25), (216, 5, 4, 3))],
            32: [(2, (0, 17, 20, 21), (17, 5, 4, 3)), (4, (0, 35, 37, 40), (45, 5, 4, 3)),
                 (8, (0, 39, 40, 44), (109, 5, 4, 3)), (16, (0, 43, 44, 47), (321, 5, 4, 3))],
        }
    ),
    c0=5.0,
    nlayers=8,
)

TABLE3_C10 = ReferenceTable(
    "table3-c10",
    "layered",
    False,
    _cells(
        {
            16: [(2, (0, 9, 10, 11), (15, 5, 4, 3)), (4, (0, 17, 19, 20), (31, 5, 4, 3)),
                 (8, (0, 19, 21, 22), (44, 5, 4, 3)), (16, (0, 22, 23, 25), (245, 5, 4, 3))],
            32: [(2, (0, 17, 20, 21), (16, 5, 4, 3)), (4, (0, 36, 37, 40), (27, 5, 4, 3)),
                 (8, (0, 39, 40, 44), (118, 5, 4, 3)), (16, (0, 43, 44, 48), (358, 5, 4, 3))],
        }
    ),
    c0=10.0,
    nlayers=8,
)

TABLE3_C10_L64 = ReferenceTable(
    "table3-c10-l64",
    "layered",
    False,
    _cells(
        {
            32: [(2, (0, 21, 22, 23), (14, 7, 5, 3)), (4, (0, 33, 35, 38), (58, 5, 4, 3)),
                 (8, (0, 39, 41, 43), (235, 5, 4, 3)), (16, (0, 40, 42, 44), (185, 5, 4, 3))],
        }
    ),
    c0=10.0,
    nlayers=64,
)

TABLE4 = ReferenceTable(
    "table4",
    "layered",
    True,
    _cells(
        {
            4: [(1, (0, 2, 3, 4), (7, 5, 4, 3)), (2, (0, 3, 4, 5), (19, 6, 4, 3)),
                (3, (0, 3, 4, 5), (60, 8, 5, 3)), (4, (0, 4, 5, 6), (103, 8, 4, 3))],
            8: [(1, (0, 4, 5, 6), (12, 5, 4, 3)), (2, (0, 5, 6, 7), (34, 6, 4, 3)),
                (3, (0, 6, 7, 8), (47, 6, 4, 3)), (4, (0, 7, 8, 9), (154, 7, 5, 3))],
            16: [(1, (0, 9, 10, 11), (16, 5, 4, 3)), (2, (0, 10, 11, 12), (27, 7, 5, 3)),
                 (3, (0, 12, 13, 14), (81, 7, 4, 3)), (4, (0, 14, 15, 16), (216, 10, 5, 3))],
            32: [(1, (0, 17, 20, 21), (17, 5, 4, 3)), (2, (0, 23, 24, 25), (45, 5, 4, 3)),
                 (3, (0, 26, 27, 28), (109, 5, 4, 3)), (4, (0, 28, 29, 30), (321, 6, 5, 3))],
        }
    ),
    c0=5.0,
    nlayers=8,
)

TABLES = {t.name: t for t in (TABLE1, TABLE2, TABLE3, TABLE3_C10, TABLE3_C10_L64, TABLE4)}

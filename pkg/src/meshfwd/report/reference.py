"""Published (delay/delay_SP, throughput/throughput_SP) pairs keyed by fixture scenario name."""

TOLERANCE = 0.005


def _basic(n, mc):
    return {"SP": (1.0, 1.0), "MP": (1.0, float(n)), "MC": mc}


TABLE1 = {
    "table1-3x2-e0.2": {"NC": (0.9312, 2.148), **_basic(3, (0.819, 1.221))},
    "table1-3x4-e0.2": {"NC": (0.967, 2.07), **_basic(3, (0.845, 1.184))},
    "table1-3x2-e0.4": {"NC": (0.93, 2.15), **_basic(3, (0.694, 1.44))},
    "table1-3x4-e0.4": {"NC": (0.967, 2.07), **_basic(3, (0.761, 1.31))},
    "table1-7x2-e0.2": {"NC-L": (0.825, 3.64), "NC-U": (0.888, 3.38), **_basic(7, (0.8, 1.25))},
    "table1-7x2-e0.4": {"NC-L": (0.771, 3.89), "NC-U": (0.903, 3.32), **_basic(7, (0.613, 1.63))},
}

TABLE2 = {
    "table2-3-e0.2": {"NC": (0.8845, 2.261), **_basic(3, (0.807, 1.24))},
    "table2-3-e0.4": {"NC": (0.838, 2.386), **_basic(3, (0.641, 1.56))},
    "table2-7-e0.2": {"NC-L": (0.804, 3.733), "NC-U": (0.827, 3.629), **_basic(7, (0.8, 1.25))},
    "table2-7-e0.4": {"NC-L": (0.656, 4.573), "NC-U": (0.777, 3.862), **_basic(7, (0.601, 1.664))},
}

TABLE3 = {
    "table3-0.3-0.4-0.5": {"NC": (0.974, 2.053), "SP": (1.0, 1.0), "MP": (1.189, 2.523), "MC": (0.745, 1.343)},
    "table3-0.5-0.6-0.8": {"NC": (1.056, 1.894), "SP": (1.0, 1.0), "MP": (1.583, 1.895), "MC": (0.658, 1.52)},
}

# hop sweep on three disjoint paths at e = 0.2; the figure carries no printed
# numbers, so the check is the geometric single-path delay m / (1 - e).
FIG4_HOPS = (2, 3, 4, 6)
FIG4_SP_DELAY = {m: m / 0.8 for m in FIG4_HOPS}

TABLES = {"table1": TABLE1, "table2": TABLE2, "table3": TABLE3}

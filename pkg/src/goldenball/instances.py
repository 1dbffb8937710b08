"""Instance I/O: TSPLIB parsing, a JSON schema for every problem kind, bundled cases.

JSON schema (version 1)
-----------------------
Every document is an object with ``"schema": "goldenball-instance"``,
``"version": 1``, ``"kind"`` and ``"name"``, plus kind-specific fields:

==========  ============================================================
tsp, atsp   ``matrix``, optional ``coords``, ``optimum``
nqp         ``size``
bpp         ``sizes``, ``capacity``, optional ``optimum``
cvrp        ``matrix``, ``demands``, ``capacity``, optional ``coords``
vrpb        ``matrix``, ``delivery``, ``pickup``, ``classes``, ``capacity``
matspspd    ``matrix``, ``k``, ``qmax``, ``node_types``
acvrp       ``valley``, ``peak``, ``delivery``, ``pickup``, ``clusters``,
            ``capacity``, ``forbidden``, ``clock``, ``seed``, optional
            ``coords`` and ``original_ids``
==========  ============================================================

Per-node arrays include the depot at index 0 for routed kinds.
"""
from __future__ import annotations

import json
import re
from dataclasses import asdict
from importlib import resources
from pathlib import Path

import numpy as np

from .core import GoldenBallError, Problem
from .problems import (
    BACKHAUL,
    LINEHAUL,
    BppInstance,
    CvrpInstance,
    NqpInstance,
    TspInstance,
    VrpbInstance,
)
from .richvrp import AcVrpInstance, Clock, MaTspSpdInstance

SCHEMA = "goldenball-instance"
SCHEMA_VERSION = 1


class InstanceFormatError(GoldenBallError, ValueError):
    """Malformed or unsupported instance text."""


# ---------------------------------------------------------------------------
# TSPLIB

_SECTIONS = {"NODE_COORD_SECTION", "EDGE_WEIGHT_SECTION", "DEMAND_SECTION",
             "DEPOT_SECTION", "DISPLAY_DATA_SECTION", "TOUR_SECTION", "FIXED_EDGES_SECTION"}
_EXPLICIT_FORMATS = {"FULL_MATRIX", "UPPER_ROW", "LOWER_ROW", "UPPER_DIAG_ROW", "LOWER_DIAG_ROW"}


def nint(x):
    """TSPLIB nearest-integer rounding, ``floor(x + 0.5)``."""
    return np.floor(np.asarray(x) + 0.5)


def _tokenize(text: str) -> tuple[dict[str, str], dict[str, list[str]]]:
    header: dict[str, str] = {}
    sections: dict[str, list[str]] = {}
    current = None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line:
            continue
        if line == "EOF":
            break
        word = line.split()[0].rstrip(":")
        if word in _SECTIONS:
            current = word
            sections[current] = line.split()[1:] if ":" not in line else []
            continue
        m = re.match(r"^([A-Z_]+)\s*:\s*(.*)$", line)
        if m and (current is None or not re.match(r"^[-+\d.eE\s]+$", line)):
            header[m.group(1)] = m.group(2).strip()
            current = None
            continue
        if current is None:
            raise InstanceFormatError(f"line {lineno}: unexpected content {line!r}")
        sections[current].extend(line.split())
    return header, sections


def _numbers(tokens: list[str], what: str) -> np.ndarray:
    try:
        return np.array([float(t) for t in tokens])
    except ValueError as exc:
        raise InstanceFormatError(f"{what}: non-numeric entry ({exc})") from None


def _explicit_matrix(fmt: str, values: np.ndarray, n: int) -> np.ndarray:
    expected = {
        "FULL_MATRIX": n * n,
        "UPPER_ROW": n * (n - 1) // 2,
        "LOWER_ROW": n * (n - 1) // 2,
        "UPPER_DIAG_ROW": n * (n + 1) // 2,
        "LOWER_DIAG_ROW": n * (n + 1) // 2,
    }[fmt]
    if values.size != expected:
        raise InstanceFormatError(
            f"EDGE_WEIGHT_SECTION: {fmt} with DIMENSION {n} needs {expected} values, got {values.size}")
    if fmt == "FULL_MATRIX":
        return values.reshape(n, n)
    m = np.zeros((n, n))
    it = iter(values)
    for i in range(n):
        if fmt == "UPPER_ROW":
            cols = range(i + 1, n)
        elif fmt == "UPPER_DIAG_ROW":
            cols = range(i, n)
        elif fmt == "LOWER_ROW":
            cols = range(i)
        else:
            cols = range(i + 1)
        for j in cols:
            m[i, j] = next(it)
    return m + m.T  # one triangle was filled; the doubled diagonal is zeroed by the caller


def parse_tsplib(text: str, name: str | None = None) -> Problem:
    """Parse a TSPLIB ``.tsp``, ``.atsp`` or ``.vrp`` document.

    EUC_2D distances use nearest-integer rounding; explicit matrices are
    copied verbatim (diagonal sentinels are zeroed).  CVRP files get their
    depot moved to index 0.

    Raises
    ------
    InstanceFormatError
        Unknown type or weight format, or a body that does not match DIMENSION.
    """
    header, sections = _tokenize(text)
    kind = header.get("TYPE", "").split()[0].upper() if header.get("TYPE") else ""
    if kind not in ("TSP", "ATSP", "CVRP"):
        raise InstanceFormatError(f"unsupported TYPE {header.get('TYPE')!r} (expected TSP, ATSP or CVRP)")
    if "DIMENSION" not in header:
        raise InstanceFormatError("missing DIMENSION")
    try:
        n = int(header["DIMENSION"])
    except ValueError:
        raise InstanceFormatError(f"bad DIMENSION {header['DIMENSION']!r}") from None
    if n < 2:
        raise InstanceFormatError(f"DIMENSION must be at least 2, got {n}")
    wtype = header.get("EDGE_WEIGHT_TYPE", "").upper()
    name = name or header.get("NAME", "instance")
    coords = None
    if wtype == "EUC_2D":
        if "NODE_COORD_SECTION" not in sections:
            raise InstanceFormatError("EUC_2D needs a NODE_COORD_SECTION")
        vals = _numbers(sections["NODE_COORD_SECTION"], "NODE_COORD_SECTION")
        if vals.size != 3 * n:
            raise InstanceFormatError(
                f"NODE_COORD_SECTION: DIMENSION {n} needs {n} rows of 'id x y', got {vals.size} numbers")
        rows = vals.reshape(n, 3)
        if not np.array_equal(rows[:, 0], np.arange(1, n + 1)):
            raise InstanceFormatError("NODE_COORD_SECTION: node ids must run 1..DIMENSION in order")
        coords = rows[:, 1:]
        diff = coords[:, None, :] - coords[None, :, :]
        matrix = nint(np.sqrt((diff ** 2).sum(-1)))
    elif wtype == "EXPLICIT":
        fmt = header.get("EDGE_WEIGHT_FORMAT", "").upper()
        if fmt not in _EXPLICIT_FORMATS:
            raise InstanceFormatError(f"unsupported EDGE_WEIGHT_FORMAT {fmt!r}")
        if "EDGE_WEIGHT_SECTION" not in sections:
            raise InstanceFormatError("EXPLICIT weights need an EDGE_WEIGHT_SECTION")
        matrix = _explicit_matrix(fmt, _numbers(sections["EDGE_WEIGHT_SECTION"], "EDGE_WEIGHT_SECTION"), n)
    else:
        raise InstanceFormatError(f"unsupported EDGE_WEIGHT_TYPE {wtype or None!r} "
                                  "(supported: EUC_2D, EXPLICIT)")
    matrix = matrix.astype(float)
    np.fill_diagonal(matrix, 0.0)

    if kind == "CVRP":
        if "CAPACITY" not in header or "DEMAND_SECTION" not in sections:
            raise InstanceFormatError("CVRP needs CAPACITY and DEMAND_SECTION")
        dem = _numbers(sections["DEMAND_SECTION"], "DEMAND_SECTION")
        if dem.size != 2 * n:
            raise InstanceFormatError(f"DEMAND_SECTION: expected {n} rows, got {dem.size / 2:g}")
        dem = dem.reshape(n, 2)[:, 1]
        depots = [int(v) for v in _numbers(sections.get("DEPOT_SECTION", ["1", "-1"]), "DEPOT_SECTION")]
        depot = depots[0] - 1
        if not 0 <= depot < n:
            raise InstanceFormatError(f"DEPOT_SECTION: depot {depot + 1} out of range")
        order = [depot] + [i for i in range(n) if i != depot]
        matrix = matrix[np.ix_(order, order)]
        return CvrpInstance(matrix, dem[order], float(header["CAPACITY"]), name=name,
                            coords=None if coords is None else coords[order])
    return TspInstance(matrix, name=name, coords=coords, optimum=KNOWN_OPTIMA.get(name))


def format_tsplib(inst: TspInstance, comment: str | None = None) -> str:
    """TSPLIB text for a TSP/ATSP case as an EXPLICIT FULL_MATRIX.

    Non-integral costs are written with ``repr`` precision, so parsing the
    output gives back the same matrix.
    """
    m = inst.matrix
    kind = "ATSP" if inst.kind == "atsp" else "TSP"
    fmt = (lambda v: str(int(v))) if np.all(m == np.round(m)) else repr
    lines = [f"NAME: {inst.name}", f"TYPE: {kind}"]
    if comment:
        lines.append(f"COMMENT: {comment}")
    lines += [f"DIMENSION: {inst.n}", "EDGE_WEIGHT_TYPE: EXPLICIT",
              "EDGE_WEIGHT_FORMAT: FULL_MATRIX", "EDGE_WEIGHT_SECTION"]
    lines += [" ".join(fmt(float(v)) for v in row) for row in m]
    lines.append("EOF")
    return "\n".join(lines) + "\n"


def parse_tour(text: str) -> np.ndarray:
    """0-based city sequence from a TSPLIB ``TOUR`` file."""
    header, sections = _tokenize(text)
    if "TOUR_SECTION" not in sections:
        raise InstanceFormatError("missing TOUR_SECTION")
    ids = [int(float(t)) for t in sections["TOUR_SECTION"]]
    if -1 in ids:
        ids = ids[: ids.index(-1)]
    if "DIMENSION" in header and len(ids) != int(header["DIMENSION"]):
        raise InstanceFormatError(f"tour lists {len(ids)} cities, DIMENSION says {header['DIMENSION']}")
    return np.asarray(ids, dtype=np.int64) - 1


def load_tsplib(path: str | Path) -> Problem:
    path = Path(path)
    return parse_tsplib(path.read_text(), name=path.stem)


# ---------------------------------------------------------------------------
# bundled cases

KNOWN_OPTIMA = {"oliver30": 420.0, "eil51": 426.0, "berlin52": 7542.0, "st70": 675.0,
                "gr17": 2085.0, "br17": 39.0}
_BUNDLED = {"oliver30": "oliver30.tsp", "eil51": "eil51.tsp", "berlin52": "berlin52.tsp",
            "st70": "st70.tsp", "gr17": "gr17.tsp", "br17": "br17.atsp"}


def bundled_names() -> list[str]:
    return sorted(_BUNDLED)


def load_bundled(name: str) -> Problem:
    """One of the TSPLIB cases shipped with the package (see :func:`bundled_names`)."""
    key = name.lower()
    if key not in _BUNDLED:
        raise KeyError(f"no bundled instance {name!r}; available: {bundled_names()}")
    text = resources.files("goldenball.data").joinpath(_BUNDLED[key]).read_text()
    inst = parse_tsplib(text, name=key)
    inst.optimum = KNOWN_OPTIMA.get(key)
    return inst


def load_bundled_tour(name: str) -> np.ndarray:
    text = resources.files("goldenball.data").joinpath(f"{name.lower()}.opt.tour").read_text()
    return parse_tour(text)


def resolve(ref: str) -> Problem:
    """Instance from a bundled name, a TSPLIB path or a JSON path."""
    if ref.lower() in _BUNDLED:
        return load_bundled(ref)
    path = Path(ref)
    if not path.exists():
        raise FileNotFoundError(f"{ref!r} is neither a bundled instance nor an existing file")
    if path.suffix == ".json":
        return parse_instance(path.read_text())
    return load_tsplib(path)


# ---------------------------------------------------------------------------
# JSON


def _lst(a):
    return None if a is None else np.asarray(a).tolist()


def serialize_instance(inst: Problem) -> str:
    """JSON text for ``inst`` following the schema in this module's docstring."""
    doc: dict = {"schema": SCHEMA, "version": SCHEMA_VERSION, "kind": inst.kind, "name": inst.name}
    if isinstance(inst, TspInstance):
        doc.update(matrix=_lst(inst.matrix), coords=_lst(inst.coords), optimum=inst.optimum)
    elif isinstance(inst, NqpInstance):
        doc.update(size=inst.n)
    elif isinstance(inst, BppInstance):
        doc.update(sizes=_lst(inst.sizes), capacity=inst.capacity, optimum=inst.optimum)
    elif isinstance(inst, CvrpInstance):
        doc.update(matrix=_lst(inst.matrix), demands=_lst(inst.demands), capacity=inst.capacity,
                   coords=_lst(inst.coords))
    elif isinstance(inst, VrpbInstance):
        doc.update(matrix=_lst(inst.matrix), delivery=_lst(inst.delivery), pickup=_lst(inst.pickup),
                   classes=_lst(inst.classes), capacity=inst.capacity, coords=_lst(inst.coords))
    elif isinstance(inst, MaTspSpdInstance):
        doc.update(matrix=_lst(inst.matrix), k=inst.k, qmax=inst.qmax,
                   node_types=_lst(inst.node_types))
    elif isinstance(inst, AcVrpInstance):
        doc.update(valley=_lst(inst.valley), peak=_lst(inst.peak), delivery=_lst(inst.delivery),
                   pickup=_lst(inst.pickup), clusters=_lst(inst.cluster_of),
                   capacity=inst.capacity, forbidden=[list(p) for p in inst.forbidden],
                   clock=asdict(inst.clock), seed=inst.seed, coords=_lst(inst.coords),
                   original_ids=_lst(inst.original_ids))
    else:
        raise TypeError(f"cannot serialize {type(inst).__name__}")
    return json.dumps(doc)


def parse_instance(text: str) -> Problem:
    """Inverse of :func:`serialize_instance`; validates every invariant on load."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InstanceFormatError(f"invalid JSON: {exc}") from None
    if not isinstance(doc, dict) or doc.get("schema") != SCHEMA:
        raise InstanceFormatError(f"not a {SCHEMA} document")
    if doc.get("version") != SCHEMA_VERSION:
        raise InstanceFormatError(
            f"schema version {doc.get('version')!r} unsupported (expected {SCHEMA_VERSION})")
    kind, name = doc.get("kind"), doc.get("name", "instance")
    try:
        if kind in ("tsp", "atsp"):
            inst = TspInstance(doc["matrix"], name=name, coords=doc.get("coords"),
                               optimum=doc.get("optimum"))
            if inst.kind != kind:
                raise InstanceFormatError(f"kind {kind!r} does not match the matrix symmetry")
            return inst
        if kind == "nqp":
            return NqpInstance(int(doc["size"]), name=name)
        if kind == "bpp":
            return BppInstance(doc["sizes"], doc["capacity"], name=name, optimum=doc.get("optimum"))
        if kind == "cvrp":
            return CvrpInstance(doc["matrix"], doc["demands"], doc["capacity"], name=name,
                                coords=doc.get("coords"))
        if kind == "vrpb":
            return VrpbInstance(doc["matrix"], doc["delivery"], doc["pickup"], doc["classes"],
                                doc["capacity"], name=name, coords=doc.get("coords"))
        if kind == "matspspd":
            return MaTspSpdInstance(doc["matrix"], doc["k"], doc["qmax"], doc.get("node_types"),
                                    name=name)
        if kind == "acvrp":
            return AcVrpInstance(doc["valley"], doc["peak"], doc["delivery"], doc["pickup"],
                                 doc["clusters"], doc["capacity"],
                                 [tuple(p) for p in doc.get("forbidden", [])],
                                 Clock(**doc.get("clock", {})), name=name, seed=doc.get("seed"),
                                 coords=doc.get("coords"), original_ids=doc.get("original_ids"))
    except InstanceFormatError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise InstanceFormatError(f"{kind} instance {name!r}: {type(exc).__name__}: {exc}") from None
    raise InstanceFormatError(f"unknown kind {kind!r}")


def derive_vrpb(cvrp: CvrpInstance, rule: str = "alternating", seed: int | None = None) -> VrpbInstance:
    """VRPB stand-in from a CVRP case; each customer's demand becomes its delivery or pickup.

    ``alternating``: odd ids linehaul, even ids backhaul.  ``all-linehaul``:
    no backhauls.  ``random``: a balanced random split drawn from ``seed``.
    """
    n = cvrp.n
    ids = np.arange(1, n + 1)
    if rule == "alternating":
        cls = np.where(ids % 2 == 1, LINEHAUL, BACKHAUL)
    elif rule == "all-linehaul":
        cls = np.full(n, LINEHAUL)
    elif rule == "random":
        cls = np.where(np.arange(n) % 2 == 0, LINEHAUL, BACKHAUL)
        cls = np.random.default_rng(seed).permutation(cls)
    else:
        raise ValueError(f"unknown rule {rule!r}")
    classes = np.concatenate(([0], cls))
    dem = cvrp.demands
    delivery = np.where(classes == LINEHAUL, dem, 0.0)
    pickup = np.where(classes == BACKHAUL, dem, 0.0)
    return VrpbInstance(cvrp.matrix, delivery, pickup, classes, cvrp.capacity,
                        name=f"{cvrp.name}-b", coords=cvrp.coords)


def random_euclidean(n: int, seed: int, scale: float = 100.0, rounding: bool = True,
                     name: str | None = None) -> TspInstance:
    """Uniform random points in a square (handy for tests and smoke runs)."""
    gen = np.random.default_rng(seed)
    xy = gen.uniform(0, scale, (n, 2))
    d = np.sqrt(((xy[:, None] - xy[None]) ** 2).sum(-1))
    return TspInstance(nint(d) if rounding else d, name=name or f"rand{n}-{seed}", coords=xy)


def random_cvrp(n: int, seed: int, capacity: float = 30.0, max_demand: int = 10,
                name: str | None = None) -> CvrpInstance:
    gen = np.random.default_rng(seed)
    xy = gen.uniform(0, 100, (n + 1, 2))
    d = nint(np.sqrt(((xy[:, None] - xy[None]) ** 2).sum(-1)))
    dem = np.concatenate(([0], gen.integers(1, max_demand + 1, n))).astype(float)
    return CvrpInstance(d, dem, capacity, name=name or f"cvrp{n}-{seed}", coords=xy)


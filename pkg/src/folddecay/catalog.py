"""Built-in surfaces and catalog files (TOML or JSON).

A catalog file holds a list ``surfaces`` whose entries have ``name``,
``coefficients`` and ``domain_radius``.  Coefficients are given either as a
list of ``[i, j, c]`` triples or as a table ``{"i,j": c}``; both mean
sum c u^i v^j.  The environment variable ``FOLDDECAY_CATALOG`` names a file
whose entries override or extend the built-ins.
"""
from __future__ import annotations

import json
import os
from pathlib import Path

from .errors import DomainError, UnknownSurfaceError
from .fields import Polynomial2, RadialBump
from .surface import SurfacePatch

try:  # Python >= 3.11
    import tomllib
except ModuleNotFoundError:  # pragma: no cover
    import tomli as tomllib

# Domain radius of the built-in patches.  Large enough that the asymptotic
# decay rates are visible on lambda in [1e2, 1e5]; see README.
DEFAULT_RADIUS = 0.5
# Amplitude support as a fraction of the domain radius.
AMPLITUDE_FRACTION = 0.9

BUILTIN = {
    "paraboloid": ({(2, 0): 1.0, (0, 2): 1.0}, "Regular"),
    "fold-cubic": ({(0, 2): 1.0, (3, 0): 1.0}, "Fold"),
    "cusp-standard": ({(0, 2): 1.0, (2, 1): 1.0}, "Cusp"),
    "quartic-normal": ({(0, 2): 1.0, (4, 0): 1.0}, "Degenerate"),
    "monkey-saddle": ({(3, 0): 1.0, (1, 2): -3.0}, "Degenerate"),
    "perturbed-fold": ({(0, 2): 1.0, (3, 0): 1.0, (4, 0): 1.0, (0, 3): 0.1}, "Fold"),
}

EXPECTED_KIND = {name: kind for name, (_, kind) in BUILTIN.items()}


def _parse_coefficients(raw):
    terms = {}
    if isinstance(raw, dict):
        for key, c in raw.items():
            i, j = (int(s) for s in str(key).strip("()[] ").split(","))
            terms[(i, j)] = float(c)
    else:
        for item in raw:
            i, j, c = item
            terms[(int(i), int(j))] = float(c)
    return terms


def read_catalog_file(path):
    """Parse a TOML or JSON catalog file into {name: (terms, radius)}."""
    path = Path(path)
    text = path.read_bytes()
    if path.suffix.lower() == ".toml":
        data = tomllib.loads(text.decode())
    else:
        data = json.loads(text)
    out = {}
    for entry in data.get("surfaces", []):
        unknown = set(entry) - {"name", "coefficients", "domain_radius", "expected"}
        if unknown:
            raise DomainError(f"unknown catalog keys {sorted(unknown)}")
        radius = float(entry.get("domain_radius", DEFAULT_RADIUS))
        out[str(entry["name"])] = (_parse_coefficients(entry["coefficients"]), radius)
    return out


def catalog_entries(path=None):
    entries = {name: (terms, DEFAULT_RADIUS) for name, (terms, _) in BUILTIN.items()}
    path = path or os.environ.get("FOLDDECAY_CATALOG")
    if path:
        entries.update(read_catalog_file(path))
    return entries


def get_surface(name, path=None):
    """Return the SurfacePatch named ``name``."""
    entries = catalog_entries(path)
    if name not in entries:
        raise UnknownSurfaceError(f"unknown surface {name!r}; known: {sorted(entries)}")
    terms, radius = entries[name]
    return SurfacePatch(h=Polynomial2.from_dict(terms), domain_radius=radius, name=name)


def default_amplitude(patch):
    """Flat-top radial bump supported in 0.9 * domain radius."""
    return RadialBump(AMPLITUDE_FRACTION * patch.domain_radius)

"""Example programs and analysis specs shipped with the package."""

from __future__ import annotations

from pathlib import Path

ROOT = Path(__file__).parent


def corpus_path(name: str) -> Path:
    """Path of a bundled file; ``name`` may omit the ``.dyna`` extension."""
    p = ROOT / name
    if not p.suffix:
        p = p.with_suffix(".dyna")
    if not p.exists():
        raise FileNotFoundError(f"no bundled example named {name!r}")
    return p


def names() -> list[str]:
    return sorted(p.name for p in ROOT.iterdir() if p.suffix in (".dyna", ".dtype"))

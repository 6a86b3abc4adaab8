from __future__ import annotations

from pathlib import Path

import numpy as np
import pytest

from avseld.wavio import write_wav

SR = 24000


def write_noise_assets(root: Path, lengths=(1.0, 2.0, 3.5), classes=(0, 4, 9), sr=SR, seed=0):
    """Seeded mono noise bursts plus an assets.csv manifest; returns the manifest path."""
    rng = np.random.default_rng(seed)
    root.mkdir(parents=True, exist_ok=True)
    rows = []
    for i, (length, cls) in enumerate(zip(lengths, classes)):
        name = f"asset{i}.wav"
        samples = 0.3 * rng.standard_normal(int(round(length * sr)))
        write_wav(root / name, samples, sr)
        rows.append(f"{name},{cls}\n")
    manifest = root / "assets.csv"
    manifest.write_text("".join(rows))
    return manifest


@pytest.fixture
def asset_dir(tmp_path):
    write_noise_assets(tmp_path / "assets")
    return tmp_path / "assets"


@pytest.fixture(scope="session")
def session_assets(tmp_path_factory):
    root = tmp_path_factory.mktemp("assets")
    write_noise_assets(root)
    return root


_ACCEPTANCE: dict[int, str] = {}


@pytest.fixture
def criterion():
    """Record the PASS/FAIL line of an acceptance criterion for the terminal summary."""

    def record(number: int, title: str, ok: bool, detail: str = "") -> bool:
        line = f"criterion {number:>2} {'PASS' if ok else 'FAIL'}  {title}"
        if detail:
            line += f"  [{detail}]"
        _ACCEPTANCE[number] = line
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for number in sorted(_ACCEPTANCE):
            terminalreporter.write_line(_ACCEPTANCE[number])

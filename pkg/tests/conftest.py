"""Shared phantom fixtures.

Everything here is pure and deterministic, so session scope is safe; tests
must treat the returned volumes as read-only.
"""

from __future__ import annotations

import pytest

from bronchometer.phantom import (
    BaPhantomSpec,
    TracheaPhantomSpec,
    ba_scan_volume,
    gen_trachea_volume,
)
from bronchometer.volume_io import save_scan


@pytest.fixture(scope="session")
def ba_default():
    """Default airway/artery pair as a one-frame scan volume plus truth."""
    return ba_scan_volume(BaPhantomSpec())


@pytest.fixture(scope="session")
def trachea_small():
    """60-frame splitting trachea (split 40, gap 5, mediastinum render)."""
    return gen_trachea_volume(TracheaPhantomSpec(n_frames=60, split_frame=40))


@pytest.fixture(scope="session")
def scans_root(tmp_path_factory, ba_default, trachea_small):
    """A directory of saved scan directories, shared by service tests."""
    root = tmp_path_factory.mktemp("scans")
    save_scan(ba_default[0], root / "ba")
    save_scan(trachea_small[0], root / "trachea")
    return root

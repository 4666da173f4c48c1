"""Shared fixtures: frozen test vectors and backend parametrization."""

from __future__ import annotations

import pathlib

import pytest

from tagsim import backend

DATA = pathlib.Path(__file__).parent / "data"


def load_vec(name: str) -> list[dict[str, str]]:
    """Parse a k=v vector file into one dict per non-comment line."""
    rows = []
    for line in (DATA / name).read_text().splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        rows.append(dict(tok.split("=", 1) for tok in line.split()))
    return rows


def load_chains(name: str) -> list[dict]:
    """Parse key_schedule.vec: chain headers followed by per-epoch rows."""
    chains: list[dict] = []
    for line in (DATA / name).read_text().splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("chain "):
            kv = dict(tok.split("=", 1) for tok in line.split()[1:])
            chains.append({"sk0": bytes.fromhex(kv["sk0"]),
                           "d0": int(kv["d0"], 16), "epochs": []})
        else:
            kv = dict(tok.split("=", 1) for tok in line.split())
            chains[-1]["epochs"].append(kv)
    return chains


def _kernel_params():
    mods = [backend.load_pure()]
    compiled = backend.load_compiled()
    if compiled is not None:
        mods.append(compiled)
    return mods


@pytest.fixture(params=_kernel_params(), ids=lambda m: m.NAME)
def kernel(request):
    """Run the test against every available arithmetic backend."""
    return request.param

import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))  # make tables importable

from covtarget import BekkParams, ReturnPanel


def random_spd(rng: np.random.Generator, n: int, scale: float = 1.0) -> np.ndarray:
    """Random symmetric positive definite matrix with eigenvalues >= ~0.1."""
    a = rng.standard_normal((n, n))
    return scale * (a @ a.T + 0.1 * n * np.eye(n))


def random_corr(rng: np.random.Generator, n: int) -> np.ndarray:
    """Random correlation matrix (normalized SPD)."""
    s = random_spd(rng, n)
    d = np.sqrt(np.diag(s))
    c = s / np.outer(d, d)
    np.fill_diagonal(c, 1.0)
    return 0.5 * (c + c.T)


def bekk2() -> BekkParams:
    """Small well-conditioned two-asset parameter set used across tests."""
    return BekkParams(
        c_lower=np.array([[0.30, 0.0], [0.10, 0.25]]),
        a_diag=np.array([0.30, 0.35]),
        b_diag=np.array([0.90, 0.85]),
    )


def gaussian_panel(
    rng_or_seed, t_len: int = 200, n: int = 3, labels=None
) -> ReturnPanel:
    """I.i.d. Gaussian panel with mild cross-correlation."""
    rng = (
        rng_or_seed
        if isinstance(rng_or_seed, np.random.Generator)
        else np.random.default_rng(rng_or_seed)
    )
    base = rng.standard_normal((t_len, n))
    common = rng.standard_normal((t_len, 1))
    r = 0.01 * (base + 0.8 * common)
    if labels is None:
        labels = tuple(f"A{i + 1}" for i in range(n))
    return ReturnPanel(labels=labels, returns=r)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240811)

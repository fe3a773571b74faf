import numpy as np
import pytest

from spectralaug import RngStream


@pytest.fixture
def gen():
    return RngStream(20240817).generator()


def random_spd(gen, dim: int, cond: float, scale: float = 1.0) -> np.ndarray:
    """SPD matrix with prescribed condition number (log-spaced spectrum)."""
    q, _ = np.linalg.qr(gen.standard_normal((dim, dim)))
    eigs = np.exp(np.linspace(0.0, np.log(cond), dim)) * scale
    m = (q * eigs) @ q.T
    return 0.5 * (m + m.T)


def matrix_with_spectrum(gen, n: int, sigma) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """H = U diag(sigma) V^T with QR-orthonormalised Gaussian bases."""
    sigma = np.asarray(sigma, dtype=float)
    d = sigma.size
    u, _ = np.linalg.qr(gen.standard_normal((n, d)))
    v, _ = np.linalg.qr(gen.standard_normal((d, d)))
    return (u * sigma) @ v.T, u, v

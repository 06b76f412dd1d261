"""Chain diagnostics: Monte Carlo standard error and effective sample size."""

from __future__ import annotations

import numpy as np


def _autocovariances(chain: np.ndarray) -> np.ndarray:
    """Biased sample autocovariances at all lags, via FFT."""
    x = chain - chain.mean()
    u = x.size
    size = 1
    while size < 2 * u:
        size *= 2
    f = np.fft.rfft(x, size)
    acov = np.fft.irfft(f * np.conjugate(f), size)[:u].real
    return acov / u


def mcse(chain: np.ndarray) -> float:
    """Monte Carlo standard error by nonoverlapping batch means.

    Batch size is floor(sqrt(U)); only the leading a*b samples enter the
    estimate.  Constant chains return 0.  Chains shorter than 100 raise.
    """
    chain = np.asarray(chain, dtype=float).ravel()
    u = chain.size
    if u < 100:
        raise ValueError(f"mcse needs a chain of at least 100 draws, got {u}")
    if np.ptp(chain) == 0.0:
        return 0.0
    b = int(np.sqrt(u))
    a = u // b
    used = chain[: a * b].reshape(a, b)
    means = used.mean(axis=1)
    var_hat = b * np.sum((means - used.mean()) ** 2) / (a - 1)
    return float(np.sqrt(var_hat / (a * b)))


def ess(chain: np.ndarray) -> float:
    """Effective sample size via initial-positive-sequence truncation.

    Sums autocovariances in adjacent pairs and truncates at the first
    nonpositive pair sum.  Constant chains return U by convention.
    """
    chain = np.asarray(chain, dtype=float).ravel()
    u = chain.size
    if u < 2:
        return float(u)
    acov = _autocovariances(chain)
    if acov[0] == 0.0:
        return float(u)
    n_pairs = (u - 1) // 2 + 1
    sigma2 = -acov[0]
    for m in range(n_pairs):
        pair = acov[2 * m] + (acov[2 * m + 1] if 2 * m + 1 < u else 0.0)
        if pair <= 0.0:
            break
        sigma2 += 2.0 * pair
    sigma2 = max(sigma2, acov[0] * 1e-12)
    return float(u * acov[0] / sigma2)


def summarize_chain(chain: np.ndarray) -> dict:
    """Mean, MCSE, and ESS of one scalar chain."""
    chain = np.asarray(chain, dtype=float).ravel()
    return {
        "mean": float(chain.mean()),
        "mcse": mcse(chain) if chain.size >= 100 else float("nan"),
        "ess": ess(chain),
    }

import numpy as np


def nmse(estimate, truth):
    """Normalised squared error ``||truth - estimate||_F^2 / ||truth||_F^2``."""
    truth = np.asarray(truth)
    estimate = np.asarray(estimate)
    if truth.shape != estimate.shape:
        raise ValueError(f"shape mismatch: {estimate.shape} vs {truth.shape}")
    den = np.vdot(truth, truth).real
    if den == 0:
        raise ValueError("NMSE undefined for an all-zero reference")
    diff = truth - estimate
    return float(np.vdot(diff, diff).real / den)


def snr_db(Y_clean, noise):
    """Realised SNR ``10 log10(||Y_clean||^2 / ||noise||^2)`` in dB."""
    return float(10 * np.log10(np.linalg.norm(Y_clean) ** 2 / np.linalg.norm(noise) ** 2))


def db(x):
    return 10 * np.log10(x)

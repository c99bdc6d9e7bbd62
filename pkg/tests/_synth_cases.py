"""Shared synthetic scenario builders for screening and processing tests."""

import numpy as np

from conftest import rate


def screening_case(n_consistent=39, n_stimuli=200, seed=0):
    """One uniform-random adversarial rater among consistent raters.

    Consistent raters score close to a shared per-stimulus true quality; the
    adversarial rater ignores it entirely. Returns (records, adversary_id).
    """
    rng = np.random.default_rng(seed)
    truth = rng.uniform(0.5, 4.5, size=n_stimuli)
    records = []
    for ui in range(n_consistent):
        scores = np.clip(truth + rng.normal(0.0, 0.25, size=n_stimuli), 0.0, 5.0)
        for si in range(n_stimuli):
            records.append(rate(f"good{ui:02d}", f"stim{si:03d}", scores[si]))
    adversary = "adversary"
    for si in range(n_stimuli):
        records.append(rate(adversary, f"stim{si:03d}", rng.uniform(0.0, 5.0)))
    return records, adversary


def clean_panel(n_subjects=12, n_stimuli=40, seed=1):
    """Well-behaved panel: all raters track the same truth with small noise."""
    rng = np.random.default_rng(seed)
    truth = rng.uniform(0.5, 4.5, size=n_stimuli)
    records = []
    for ui in range(n_subjects):
        gain = rng.uniform(0.9, 1.1)
        shift = rng.normal(0.0, 0.2)
        scores = np.clip(gain * truth + shift + rng.normal(0.0, 0.15, size=n_stimuli), 0.0, 5.0)
        for si in range(n_stimuli):
            records.append(rate(f"subj{ui:02d}", f"stim{si:03d}", scores[si]))
    return records

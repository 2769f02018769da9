import numpy as np
import pytest

from mmspeech.data import AudioClip


@pytest.fixture
def sr():
    return 16000


@pytest.fixture
def tone():
    def make(freq, duration_s=1.0, amp=0.8, rate=16000):
        t = np.arange(int(duration_s * rate)) / rate
        return AudioClip(samples=amp * np.sin(2 * np.pi * freq * t), sample_rate=rate)
    return make


@pytest.fixture
def pulse_train():
    def make(period_samples=160, duration_s=1.0, rate=16000, amp=1.0):
        x = np.zeros(int(duration_s * rate))
        x[::period_samples] = amp
        return AudioClip(samples=x, sample_rate=rate)
    return make


@pytest.fixture(scope="session")
def small_cohort(tmp_path_factory):
    """A 5-subject cohort shared by the slower integration tests."""
    from mmspeech.synth import CohortParams, synth_cohort
    out = tmp_path_factory.mktemp("cohort5")
    params = CohortParams(n_subjects=5, reps_per_subject=4, seed=202)
    manifest_path = synth_cohort(params, out)
    return manifest_path

"""
Shared pytest setup: makes src/ importable and provides small fixtures.
"""

import math
import sys
from pathlib import Path

import numpy as np
import pytest

# Add src/ to the path so the package imports without installation
src_path = Path(__file__).parent.parent / "src"
sys.path.insert(0, str(src_path))


@pytest.fixture
def white_noise():
    """Unit-variance white noise sampled at dt = 0.01."""
    from ergodic_eki.core.models import Trajectory
    generator = np.random.default_rng(7)
    return Trajectory(0.01, generator.standard_normal(90_000))


@pytest.fixture
def ar1_series():
    """AR(1) series with coefficient 0.8, unit sampling interval."""
    from ergodic_eki.core.models import Trajectory
    generator = np.random.default_rng(11)
    noise = generator.standard_normal(50_000)
    x = np.empty_like(noise)
    x[0] = noise[0]
    for t in range(1, x.shape[0]):
        x[t] = 0.8 * x[t - 1] + noise[t]
    return Trajectory(1.0, x)


@pytest.fixture(scope="session")
def ou_series():
    """Stationary OU path dx = -x dt + sqrt(2) dW, exact updates at dt = 1e-3 for T = 1e4."""
    from scipy.signal import lfilter

    from ergodic_eki.core.models import Trajectory
    dt, n_samples = 1e-3, 10_000_000
    decay = math.exp(-dt)
    scale = math.sqrt(1.0 - decay * decay)
    generator = np.random.default_rng(19)
    x0 = generator.standard_normal()
    noise = generator.standard_normal(n_samples)
    x, _ = lfilter([scale], [1.0, -decay], noise, zi=[decay * x0])
    return Trajectory(dt, x)

"""
ergodic-eki - calibration of SDE models to ergodic statistics with ensemble
Kalman inversion.

The Streamlit viewer is imported lazily from ``ergodic_eki.ui`` so the
library and CLI do not need a running Streamlit session.
"""

from .core import *

__version__ = "1.0.0"
__description__ = "Ensemble Kalman calibration of SDEs to ergodic statistics"

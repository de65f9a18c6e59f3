"""
Invariant measure page.
"""

import os

import pandas as pd
import streamlit as st

from ...core.config import DIRECTORIES
from ...core.data_manager import read_histogram


def render_measures_page(data_manager, summary):
    """Render truth and fitted histograms per component."""
    st.title("📊 Invariant measures")
    files = data_manager.list_files("histograms")
    labels = sorted({name[len("hist_"):].rsplit("_", 1)[0] for name in files})
    if not labels:
        st.info("No histograms in this bundle (the validation run may have failed).")
        return

    distances = summary.get("tv_distance", {})
    for label in labels:
        with st.expander(f"{label}  ·  TV {distances.get(label, float('nan')):.3f}", expanded=True):
            frame = pd.DataFrame()
            for kind in ("truth", "fitted"):
                path = data_manager.path(DIRECTORIES["histograms"], f"hist_{label}_{kind}.csv")
                if not os.path.exists(path):
                    continue
                hist = read_histogram(path)
                frame[kind] = hist.masses
                frame.index = 0.5 * (hist.edges[:-1] + hist.edges[1:])
            st.line_chart(frame)

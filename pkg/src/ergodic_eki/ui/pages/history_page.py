"""
EKI history page.
"""

import numpy as np
import pandas as pd
import streamlit as st


def render_history_page(data_manager):
    """Render the misfit per generation and the ensemble spread."""
    st.title("🕑 EKI history")
    records = data_manager.load_history()
    frame = pd.DataFrame({
        "generation": [r["gen"] for r in records],
        "misfit": [r["misfit_mean"] for r in records],
        "failed": [len(r["failed_members"]) for r in records],
    }).set_index("generation")
    st.line_chart(np.log10(frame[["misfit"]]).rename(columns={"misfit": "log10 misfit"}))

    if records and "particles" in records[0]:
        spread = [np.asarray(r["particles"]).std(axis=0).mean() for r in records]
        frame["mean particle std"] = spread
        st.line_chart(frame[["mean particle std"]])
    st.dataframe(frame, use_container_width=True)

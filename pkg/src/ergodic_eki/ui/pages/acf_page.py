"""
Autocorrelation page.
"""

import streamlit as st

from ...core.config import DIRECTORIES
from ...core.data_manager import read_table


def render_acf_page(data_manager):
    """Render truth and fitted autocorrelation functions."""
    st.title("🔁 Autocorrelation")
    files = data_manager.list_files("acf")
    if not files:
        st.info("This experiment does not use autocorrelation data.")
        return
    for name in files:
        st.subheader(name[len("acf_"):-len(".csv")])
        table = read_table(data_manager.path(DIRECTORIES["acf"], name)).set_index("lag")
        st.line_chart(table.rename(columns={"acf": "truth"}))

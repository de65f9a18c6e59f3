"""
Learned functions page.
"""

import streamlit as st

from ...core.config import DIRECTORIES
from ...core.data_manager import read_table


def render_functions_page(data_manager):
    """Render every function table of the bundle."""
    st.title("🧩 Learned functions")
    files = data_manager.list_files("functions")
    if not files:
        st.info("This model learns no functions.")
        return
    for name in files:
        title = name[:-len(".csv")]
        st.subheader(title)
        table = read_table(data_manager.path(DIRECTORIES["functions"], name))
        if title == "closure_truth":
            st.scatter_chart(table, x="x", y="value")
        else:
            st.line_chart(table.set_index("x"))

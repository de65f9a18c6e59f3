"""
Data fit page: truth statistics against the fitted model's.
"""

import pandas as pd
import streamlit as st


def render_data_page(data_manager, summary):
    """Render the data comparison and run summary."""
    st.title(f"📈 {summary['name']}")

    col1, col2, col3, col4 = st.columns(4)
    with col1:
        st.metric("Model", summary["model"])
    with col2:
        st.metric("Parameters", summary["n_parameters"])
    with col3:
        st.metric("Data dimension", summary["data_dimension"])
    with col4:
        st.metric(
            "Misfit",
            f"{summary['misfit_final']:.4g}",
            f"{summary['misfit_final'] - summary['misfit_initial']:+.4g}",
            delta_color="inverse",
        )

    st.markdown("---")
    st.subheader("Statistics")
    comparison = data_manager.load_table("data_comparison").set_index("label")
    st.bar_chart(comparison[["truth", "fitted"]])
    comparison["z"] = (comparison["fitted"] - comparison["truth"]) / comparison["truth_std"]
    st.dataframe(comparison, use_container_width=True)

    st.subheader("Fitted parameters (ensemble mean)")
    rows = [{"parameter": name, "value": _format_value(value)} for name, value in summary["final_mean"].items()]
    st.dataframe(pd.DataFrame(rows), use_container_width=True, hide_index=True)
    st.caption(f"Data source: {summary['data_source']} · seed {summary['seed']}")


def _format_value(value):
    if isinstance(value, list):
        return ", ".join(f"{v:.4g}" for v in value)
    return f"{value:.6g}"

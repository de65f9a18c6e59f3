"""
UI components for the result bundle viewer.
Contains the main UI logic and page routing.
"""

import streamlit as st

from ..core.config import APP_CONFIG, PAGES
from ..core.data_manager import DataManager
from ..core.errors import DataFileError
from .pages.acf_page import render_acf_page
from .pages.data_page import render_data_page
from .pages.functions_page import render_functions_page
from .pages.history_page import render_history_page
from .pages.measures_page import render_measures_page


class BundleViewerApp:
    """Read-only viewer of one finished result bundle."""

    def __init__(self, bundle_dir: str):
        self.bundle_dir = bundle_dir
        self.setup_page_config()
        self.data_manager = DataManager(bundle_dir, create=False)

    def setup_page_config(self):
        """Configure Streamlit page settings."""
        st.set_page_config(
            page_title=APP_CONFIG["page_title"],
            layout=APP_CONFIG["layout"]
        )

    def render_sidebar(self):
        """Render the navigation sidebar."""
        st.sidebar.title("Bundle")
        st.sidebar.caption(self.bundle_dir)
        return st.sidebar.radio("Go to:", PAGES, index=0)

    def run(self):
        """Main application entry point."""
        current_page = self.render_sidebar()
        try:
            summary = self.data_manager.load_summary()
        except DataFileError as e:
            st.error(f"Not a result bundle: {e}")
            return

        if current_page == "Data fit":
            render_data_page(self.data_manager, summary)
        elif current_page == "Invariant measures":
            render_measures_page(self.data_manager, summary)
        elif current_page == "Autocorrelation":
            render_acf_page(self.data_manager)
        elif current_page == "Functions":
            render_functions_page(self.data_manager)
        elif current_page == "History":
            render_history_page(self.data_manager)

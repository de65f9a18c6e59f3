"""
UI components of ergodic-eki.
Contains the Streamlit result bundle viewer and its pages.
"""

from .ui_components import BundleViewerApp

__all__ = ['BundleViewerApp']

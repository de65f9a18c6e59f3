#!/usr/bin/env python3
"""
Entry point for ergodic-eki.

Usage:
    python main.py run configs/l63_case_i_sde.toml --smoke
    streamlit run main.py -- results/l63_case_i_sde
"""

import sys
from pathlib import Path

# Add src/ to the path so the package imports without installation
src_path = Path(__file__).parent / "src"
sys.path.insert(0, str(src_path))


def _running_in_streamlit() -> bool:
    try:
        from streamlit.runtime import exists
    except ImportError:
        return False
    return exists()


def main():
    """Dispatch to the bundle viewer under Streamlit, otherwise to the CLI."""
    if _running_in_streamlit():
        from ergodic_eki.ui import BundleViewerApp

        bundle_dir = sys.argv[1] if len(sys.argv) > 1 else "results"
        BundleViewerApp(bundle_dir).run()
    else:
        from ergodic_eki.cli import main as cli_main

        cli_main()


if __name__ == "__main__":
    main()

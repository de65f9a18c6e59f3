# Setup script for the ergodic-eki project

from setuptools import find_packages, setup

setup(
    name="ergodic-eki",
    version="1.0.0",
    description="Ensemble Kalman calibration of SDE models to ergodic statistics",
    packages=find_packages(where="src"),
    package_dir={"": "src"},
    python_requires=">=3.9",
    install_requires=[
        "numpy>=1.24.0",
        "scipy>=1.10.0",
        "pandas>=1.5.0",
        "joblib>=1.3.0",
        "tqdm>=4.65.0",
        "toml>=0.10.2",
        "jsonschema>=4.17.0",
        "click>=8.1.0",
        "streamlit>=1.28.0",
    ],
    extras_require={
        "dev": ["pytest>=7.0.0"],
    },
    entry_points={
        "console_scripts": [
            "ergodic-eki=ergodic_eki.cli:main",
        ],
    },
    classifiers=[
        "Development Status :: 4 - Beta",
        "Intended Audience :: Science/Research",
        "License :: OSI Approved :: MIT License",
        "Programming Language :: Python :: 3",
        "Programming Language :: Python :: 3.9",
        "Programming Language :: Python :: 3.10",
        "Programming Language :: Python :: 3.11",
        "Topic :: Scientific/Engineering :: Mathematics",
    ],
)

#!/usr/bin/env python3
"""Setup script for the in-orbit analytics toolkit."""

from setuptools import setup, find_packages
import pathlib

here = pathlib.Path(__file__).parent.resolve()

long_description = (here / "README.md").read_text(encoding="utf-8")

# Version and author live in src/__init__.py; read them without importing the package
version_dict = {}
with open(here / "src" / "__init__.py") as f:
    for line in f:
        if line.startswith(("__version__", "__author__")):
            exec(line, version_dict)

setup(
    name="orbital-analytics-planner",
    version=version_dict["__version__"],
    description="Deployment planning, workload routing and simulation for analytics on satellite constellations",
    long_description=long_description,
    long_description_content_type="text/markdown",
    author=version_dict["__author__"],
    classifiers=[
        "Development Status :: 4 - Beta",
        "Intended Audience :: Science/Research",
        "Topic :: Scientific/Engineering",
        "Programming Language :: Python :: 3",
        "Programming Language :: Python :: 3.9",
        "Programming Language :: Python :: 3.10",
        "Programming Language :: Python :: 3.11",
        "Programming Language :: Python :: 3.12",
    ],
    keywords="satellite, constellation, edge computing, milp, simulation",
    packages=find_packages(include=["src", "src.*"]),
    python_requires=">=3.9",
    install_requires=[
        "pandas>=1.5.0",
        "numpy>=1.21.0",
        "scipy>=1.9.0",
        "scikit-learn>=1.1.0",
        "pandera>=0.17.0",
        "pydantic>=2.0.0",
        "jinja2>=3.1.0",
        "networkx>=3.0",
        "simpy>=4.0.0",
        "python-json-logger>=2.0.0",
    ],
    extras_require={
        "dev": [
            "pytest>=7.4",
            "pytest-cov>=4.1",
            "black>=23.0",
            "mypy>=1.5",
            "pylint>=2.17",
            "bandit>=1.7",
            "pip-audit>=2.6",
            "pre-commit>=3.4",
        ],
    },
    entry_points={
        "console_scripts": [
            "orbital-analytics=src.cli:main",
        ],
    },
)

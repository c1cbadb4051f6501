from setuptools import setup, find_packages

setup(
    name="squeezing-gate-sim",
    version="1.0.0",
    packages=find_packages(exclude=["tests", "examples"]),
    package_data={
        "squeezing_gate_sim": ["configs/*.ini", "configs/*.yml"],
    },
    install_requires=[
        # Core dependencies
        "pandas>=1.5.0",
        "numpy>=1.21.0",
        "scipy>=1.9.0",
        "click>=8.0.0",

        # Config and run manifests
        "pyyaml>=6.0",

        # Sweeps
        "joblib>=1.2.0",

        # Table invariants
        "great_expectations>=0.15.0,<1.0",
    ],
    extras_require={
        "dev": [
            "pytest>=7.3.0",
            "pytest-cov>=4.0.0",
            "black>=23.3.0",
            "flake8>=6.0.0",
            "isort>=5.12.0",
            "mypy>=1.3.0",
            "pre-commit>=3.3.0",
        ],
    },
    entry_points={
        "console_scripts": [
            "squeezing-gate=squeezing_gate_sim.cli:main",
        ],
    },
    description="Covariance-level simulator of an all-optical feedforward squeezing gate",
    long_description=open("README.md").read(),
    long_description_content_type="text/markdown",
    classifiers=[
        "Development Status :: 4 - Beta",
        "Intended Audience :: Science/Research",
        "Programming Language :: Python :: 3.9",
        "Programming Language :: Python :: 3.10",
        "Topic :: Scientific/Engineering :: Physics",
    ],
    python_requires=">=3.9",
)

"""
Hamiltonet - Hamiltonian neural networks for learned dynamics
with a reverse-mode autodiff core, benchmark systems and forecast evaluation
"""
from setuptools import setup, find_packages
from pathlib import Path

# Read README for long description
this_directory = Path(__file__).parent
long_description = (this_directory / "README.md").read_text()

setup(
    name="hamiltonet",
    version="0.1.0",
    description="Hamiltonian neural networks (NN, HNN, gHNN) for learning and forecasting conservative dynamics",
    long_description=long_description,
    long_description_content_type="text/markdown",
    packages=find_packages(include=["hamiltonet", "hamiltonet.*"]),
    classifiers=[
        "Development Status :: 3 - Alpha",
        "Intended Audience :: Science/Research",
        "Topic :: Scientific/Engineering :: Artificial Intelligence",
        "Topic :: Scientific/Engineering :: Physics",
        "License :: OSI Approved :: MIT License",
        "Programming Language :: Python :: 3",
        "Operating System :: OS Independent",
    ],
    python_requires=">=3.9",
    install_requires=[
        "python-dotenv>=1.0.0",
        "matplotlib>=3.7.0",
        "pyyaml>=6.0",
        "pandas>=2.0.2",
        "numpy>=1.20.0",
        "scikit-learn>=1.3.0",
        "joblib>=1.3.0",
        "tabulate>=0.9.0",
    ],
    extras_require={
        "dev": [
            "pytest>=7.4.0",
            "pytest-cov>=4.1.0",
            "black>=23.0.0",
            "flake8>=6.0.0",
            "mypy>=1.0.0",
            "isort>=5.12.0",
        ],
    },
    entry_points={
        "console_scripts": [
            "hamiltonet=hamiltonet.cli:main",
        ],
    },
    keywords=["hamiltonian", "neural-networks", "dynamical-systems", "autodiff", "forecasting"],
    zip_safe=False,
)

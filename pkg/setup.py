"""
Setup script to install aftest as a global command
"""

from setuptools import find_namespace_packages, setup

setup(
    name="aftest",
    version="1.0.0",
    description="ReLU / Leaky ReLU / ALReLU activation comparison and gradient-check CLI",
    packages=find_namespace_packages(include=["afnet", "config", "tools"]),
    py_modules=["aftest"],
    data_files=[("configs", ["configs/schema.json", "configs/blobs.json", "configs/stress.json"])],
    install_requires=[
        "numpy>=1.24.0",
        "scikit-learn>=1.3.0",
        "pandas>=1.5.0",
        "Pillow>=10.1.0",
        "colorama>=0.4.6",
        "python-dotenv>=1.0.0",
        "click>=8.0.0",
        "jsonschema>=4.20.0",
    ],
    entry_points={
        "console_scripts": [
            "aftest=aftest:main",
        ],
    },
    python_requires=">=3.9",
)

from setuptools import setup, find_packages

setup(
    name="rulesim",
    version="0.1",
    packages=find_packages(exclude=["tests", "tests.*", "examples", "examples.*"]),
    install_requires=["torch", "numpy", "pyyaml", "scipy", "matplotlib"],
    extras_require={"test": ["pytest"]},
    entry_points={"console_scripts": ["rulesim=rulesim.cli:main"]},
)

from setuptools import setup

setup(
    name="surprise_swarm",
    version="0.1.0",
    packages=["swarm", "experiments"],
    package_data={"experiments": ["config.json", "scenarios.json"]},
    python_requires=">=3.8",
    install_requires=[
        "numpy>=1.22.0",
        "scipy>=1.8.0",
        "pydantic>=2.0.0",
        "fastapi>=0.100.0",
        "uvicorn>=0.23.0",
        "httpx>=0.24.0",
    ],
    extras_require={
        "test": ["pytest>=7.0.0", "hypothesis>=6.0.0"],
    },
    entry_points={
        "console_scripts": ["surprise-swarm=experiments.cli:main"],
    },
    author="Surprise Swarm",
    description="Swarm self-assembly by minimizing surprise: grid simulator, neuroevolution and structure analysis",
    long_description=open("README.md").read(),
    long_description_content_type="text/markdown",
    classifiers=[
        "Development Status :: 3 - Alpha",
        "Intended Audience :: Science/Research",
        "License :: OSI Approved :: MIT License",
        "Programming Language :: Python :: 3",
        "Programming Language :: Python :: 3.8",
        "Programming Language :: Python :: 3.9",
        "Programming Language :: Python :: 3.10",
        "Programming Language :: Python :: 3.11",
    ],
)

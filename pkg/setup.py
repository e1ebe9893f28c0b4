from setuptools import find_packages, setup

setup(
    name="liouville-lab",
    version="0.1.0",
    description="Radial steady states, barrier supersolutions and monotone parabolic sweeps for u_t = Δu + |u|^{p-1}u",
    license="Apache License, Version 2.0",
    packages=find_packages(include=["src", "src.*", "configs"], exclude=["tests", "tests.*"]),
    include_package_data=True,
    package_data={"configs": ["**/*.yaml"], "": ["schemas/*.json"]},
    python_requires=">=3.9",
    install_requires=[
        "numpy>=1.24",
        "scipy>=1.10",
        "pandas>=1.5",
        "tqdm>=4.66",
        "hydra-core~=1.3.2",
        "hydra-colorlog",
        "omegaconf~=2.3.0",
        "rootutils>=1.0.7",
        "rich>=13.7",
        "ml_collections",
        "packaging>=23.2",
    ],
    extras_require={"test": ["pytest>=8.0", "sh", "jsonschema>=4.0"]},
    entry_points={
        "console_scripts": [
            "liouville-lab = src.cli:main",
            "liouville-run = src.run_parabolic:main",
        ]
    },
    classifiers=[
        "License :: OSI Approved :: Apache Software License",
        "Operating System :: POSIX :: Linux",
        "Programming Language :: Python :: 3.9",
        "Topic :: Scientific/Engineering :: Mathematics",
    ],
)

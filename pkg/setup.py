""" _setup module.

"""

import setuptools

with open("README.md", "r") as fh:
    long_description = fh.read()

setuptools.setup(
    name="cicstone",
    version="0.1.0",
    license="MIT",
    description="Contrastive intrinsic control for reward-free skill discovery on desk-scale worlds.",
    long_description=long_description,
    long_description_content_type="text/markdown",
    packages=setuptools.find_packages(exclude=["tests", "tests.*", "examples", "examples.*"]),
    install_requires=[
        "numpy>=1.18.4",
        "scipy>=1.5",
        "msgpack>=1.0.0",
    ],
    extras_require={
        "test": ["pytest>=6.0"],
    },
    entry_points={
        "console_scripts": ["cicstone=cicstone.commands:main"],
    },
    keywords=["reinforcement learning", "unsupervised", "skills", "intrinsic reward", "contrastive", "cicstone"],
    classifiers=[
        "Programming Language :: Python :: 3",
        'Intended Audience :: Science/Research',
        "License :: OSI Approved :: MIT License",
        "Operating System :: OS Independent",
    ],
    python_requires='>=3.8',
)

from setuptools import find_packages, setup

LATEST_VERSION = "0.1.0"

exclude_packages = [
    "pytest",
    "pytest-mock",
    "coverage",
]

with open(r"README.md", "r", encoding="utf-8") as f:
    long_description = f.read()

with open("requirements.txt", "r") as f:
    reqs = [
        line.strip() for line in f
        if line.strip() and not line.startswith("#") and not any(pkg in line for pkg in exclude_packages)
    ]

setup(
    name="ctxlab",
    version=LATEST_VERSION,
    description="Long-context adaptation lab: ODE frequency scaling and short-to-long preference optimization",
    packages=find_packages(include=["ctxlab", "ctxlab.*"]),
    py_modules=["cli"],
    long_description=long_description,
    long_description_content_type="text/markdown",
    license="MIT",
    classifiers=[
        "License :: OSI Approved :: MIT License",
        "Intended Audience :: Science/Research",
        "Programming Language :: Python :: 3.11",
        "Programming Language :: Python :: 3.12",
        "Topic :: Scientific/Engineering :: Artificial Intelligence",
    ],
    python_requires='>=3.10',
    install_requires=reqs,
    entry_points={"console_scripts": ["ctxlab=cli:main"]},
)

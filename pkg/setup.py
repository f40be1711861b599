from setuptools import setup, find_packages

setup(
    name="privrecourse",
    version="1.0.0",
    description="Differentially private algorithmic recourse and membership-inference evaluation",
    long_description=open('README.md', encoding='utf-8').read(),
    long_description_content_type='text/markdown',
    author="Ivan APEDO",
    author_email='apedoivan@gmail.com',
    packages=find_packages(exclude=["tests", "tests.*", "examples", "examples.*"]),
    install_requires=[
        "lz4>=4.0.0",  # Model store compression
        "sortedcontainers>=2.4.0",  # Ordered in-memory model store
        "pycache-handler",
        "numpy>=1.22",
        "scipy>=1.8",
        "scikit-learn>=1.1",
        "pandas>=1.4",
    ],
    entry_points={
        "console_scripts": [
            "privrecourse=privrecourse.cli:main",
        ],
    },
    python_requires=">=3.8",
    classifiers=[
        "Development Status :: 4 - Beta",
        "Intended Audience :: Science/Research",
        "License :: OSI Approved :: MIT License",
        "Programming Language :: Python :: 3",
        "Programming Language :: Python :: 3.8",
        "Programming Language :: Python :: 3.9",
        "Programming Language :: Python :: 3.10",
        "Programming Language :: Python :: 3.11",
        "Programming Language :: Python :: 3.12",
        "Topic :: Scientific/Engineering :: Artificial Intelligence",
    ],
)

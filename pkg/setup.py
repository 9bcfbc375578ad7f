import setuptools

with open('README.md', 'r') as fh:
    long_description = fh.read()

entry_points = {
    'console_scripts': [
        'bandcrit = bandcrit.bandcrit_exe:cli'
    ]
}

with open("requirements.txt", "r") as f:
    install_requires = f.readlines()

version_dict = {}
with open("bandcrit/_version.py") as fp:
    exec(fp.read(), version_dict)
setuptools.setup(
    name='bandcrit',
    version=version_dict["__version__"],
    description='Numerical lab for characteristic polynomial correlators of non-Hermitian random band matrices',
    long_description=long_description,
    long_description_content_type='text/markdown',
    entry_points=entry_points,
    packages=setuptools.find_packages(exclude=['tests']),
    include_package_data=True,
    install_requires=install_requires,
    python_requires='>=3.8',
    classifiers=(
        'Programming Language :: Python :: 3',
        'License :: OSI Approved :: MIT License',
        'Operating System :: OS Independent',
    ),
)

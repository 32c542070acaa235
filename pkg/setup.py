import os
from setuptools import setup

here = os.path.abspath(os.path.dirname(__file__))

with open(os.path.join(here, 'README.md')) as readme_file:
    README = readme_file.read()

setup(
    name='fluctuation-outlier-detector',
    version='0.1.0',
    packages=['fbod'],
    license='MIT',
    description='Fluctuation-based outlier detection over randomly linked graphs',
    long_description=README,
    long_description_content_type='text/markdown',
    python_requires='>=3.8',
    install_requires=[
        'setuptools>=54.2.0',
        'numpy>=1.21',
        'scipy>=1.7',
        'pandas>=1.3',
    ],
    entry_points={
        'console_scripts': [
            'fbod=fbod.run:main',
        ],
    },
)

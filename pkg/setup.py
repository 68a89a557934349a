#!/usr/bin/env python3

from hiddensignal import __version__

import codecs
import sys

if not sys.version_info[0] >= 3 and not sys.version_info[1] >= 8:
    print("ERROR for hiddensignal: Sorry, only python 3.8 or higher are supported")
    sys.exit(1)

from setuptools import setup, find_packages
from os.path import abspath, dirname, join

here = abspath(dirname(__file__))

with codecs.open(join(here, 'README.md'), encoding='utf-8') as f:
    README = f.read()

setup(
    name='hiddensignal',
    version=__version__,
    description='HiddenSignal',
    long_description=README,
    long_description_content_type="text/markdown",
    license='BSD 2-Clause',
    keywords='bell chsh pr-box learning betting randomness simulation',
    classifiers=[
        'Intended Audience :: Science/Research',
        'Topic :: Scientific/Engineering :: Physics',
        'License :: OSI Approved :: BSD License',
        'Programming Language :: Python :: 3.8',
    ],
    install_requires=['asciitree==0.3.3', 'progressbar2', 'typing_extensions'],
    setup_requires=['asciitree==0.3.3', 'progressbar2', 'typing_extensions'],
    extras_require={'test': ['pytest']},
    packages=find_packages(exclude=['tests', 'tests.*']),
    entry_points={'console_scripts': ['hiddensignal = hiddensignal.scripts.cli:main']},
)

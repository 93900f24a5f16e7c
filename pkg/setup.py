from setuptools import setup

def readme():
    with open('README.rst') as f:
        return f.read()

setup(name='PyEprLab',
        version='0.1.0',
        description='Numerical laboratory for position-momentum EPR entanglement: ghost imaging, ghost interference and criteria.',
        long_description=readme(),
        license='Apache License 2.0',
        packages=[
            'PyEprLab',
            'PyEprLab.Config',
            'PyEprLab.Criteria',
            'PyEprLab.Dataset',
            'PyEprLab.Fit',
            'PyEprLab.Node',
            'PyEprLab.Optics',
            'PyEprLab.Pattern',
            'PyEprLab.State',
            ],
        install_requires=[
            'numpy>=1.17',
            'scipy>=1.4',
            ],
        extras_require={
            'test': ['pytest>=6.0'],
            },
        entry_points={
            'console_scripts': ['pyeprlab=PyEprLab.Cli:main'],
            },
        include_package_data=True,
        classifiers=[
            'Intended Audience :: Science/Research',
            'Operating System :: OS Independent',
            'Development Status :: 3 - Alpha',
            'License :: OSI Approved :: Apache Software License',
            'Programming Language :: Python :: 3',
            'Topic :: Scientific/Engineering :: Physics'
            ],
        zip_safe=False)

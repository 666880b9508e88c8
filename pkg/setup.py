from setuptools import setup

__version__ = '0.0.1'

setup(name='milbus_ids',
      version=__version__,
      packages=['src'],
      python_requires='>=3.8',
      install_requires=[
          'hydra-core>=1.3',
          'matplotlib',
          'numpy',
          'omegaconf>=2.3',
          'scikit-learn',
          'tensorboardX',
          'tqdm',
      ],
      entry_points={'console_scripts': ['milbus=src.cli:main']},
      zip_safe=False
)

# Sphinx configuration for the bandcrit documentation.

# -- Path setup --------------------------------------------------------------

from pathlib import Path
import sys
bandcrit_path = Path(__file__).parents[2].resolve()
sys.path.insert(0, str(bandcrit_path))

version_dict = {}
with open(bandcrit_path / "bandcrit/_version.py") as fp:
    exec(fp.read(), version_dict)

# -- Project information -----------------------------------------------------

project = 'bandcrit'
release = version_dict["__version__"]

# -- General configuration ---------------------------------------------------

extensions = [
    'sphinx.ext.napoleon',
    'sphinx.ext.autodoc',
    'sphinx.ext.doctest',
    'sphinx.ext.mathjax',
    'sphinx.ext.viewcode',
    'sphinx.ext.intersphinx',
]

templates_path = ['_templates']
exclude_patterns = []

# -- Options for HTML output -------------------------------------------------

import sphinx_theme
html_theme = 'stanford_theme'
html_theme_path = [sphinx_theme.get_html_theme_path('stanford-theme')]

html_static_path = ['_static']

master_doc = 'index'

# Order of docstrings; by source or alphabetical.
autodoc_member_order = 'bysource'

pygments_style = 'sphinx'

intersphinx_mapping = {'NumPy': ('https://numpy.org/doc/stable/', None),
                       'SciPy': ('https://docs.scipy.org/doc/scipy/', None),
                       'matplotlib': ('https://matplotlib.org/stable/', None)}

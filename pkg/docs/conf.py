# Sphinx configuration for hpicp-regularization
import os
import shutil
import sys

__location__ = os.path.dirname(__file__)

sys.path.insert(0, os.path.join(__location__, "../src"))

# -- Regenerate the module reference on every build ---------------------------
from sphinx.ext import apidoc  # noqa: E402

output_dir = os.path.join(__location__, "api")
module_dir = os.path.join(__location__, "../src/hpicp")
shutil.rmtree(output_dir, ignore_errors=True)
try:
    apidoc.main(["--implicit-namespaces", "-f", "-o", output_dir, module_dir])
except Exception as e:
    print(f"Running `sphinx-apidoc` failed!\n{e}")

# -- General configuration ----------------------------------------------------
extensions = [
    "sphinx.ext.autodoc",
    "sphinx.ext.intersphinx",
    "sphinx.ext.viewcode",
    "sphinx.ext.doctest",
    "sphinx.ext.mathjax",
    "sphinx.ext.napoleon",
]
source_suffix = ".rst"
master_doc = "index"
project = "hpicp-regularization"
copyright = "2024, cdohmen"

try:
    from hpicp import __version__ as version
except ImportError:
    version = ""
if not version or version.lower() == "unknown":
    version = os.getenv("READTHEDOCS_VERSION", "unknown")
release = version

exclude_patterns = ["_build", "Thumbs.db", ".DS_Store", ".venv"]
pygments_style = "sphinx"

# -- HTML output --------------------------------------------------------------
html_theme = "alabaster"
html_theme_options = {"sidebar_width": "300px", "page_width": "1200px"}
htmlhelp_basename = "hpicp-regularization-doc"

# -- Cross references ---------------------------------------------------------
python_version = ".".join(map(str, sys.version_info[0:2]))
intersphinx_mapping = {
    "python": ("https://docs.python.org/" + python_version, None),
    "numpy": ("https://numpy.org/doc/stable", None),
    "scipy": ("https://docs.scipy.org/doc/scipy/reference", None),
    "click": ("https://click.palletsprojects.com/en/stable", None),
}

print(f"loading configurations for {project} {version} ...", file=sys.stderr)

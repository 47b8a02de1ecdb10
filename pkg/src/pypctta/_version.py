from importlib.metadata import PackageNotFoundError, version

try:
    __version__ = version("py-pctta")
# during CI
except PackageNotFoundError:
    __version__ = "0.1.0"

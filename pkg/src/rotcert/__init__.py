"""rotcert: a small variational quantum classifier simulator with
random-rotation smoothing and certified-robustness bounds."""

__version__ = "0.1.0"

from . import certify, circuit, cli, encode, qla, rotnoise, vqc  # noqa: F401

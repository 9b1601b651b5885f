"""vulnlibs: predicts the libraries affected by vulnerability reports,
chronologically and including labels never seen in training."""

__version__ = "0.1.0"

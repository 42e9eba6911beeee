"""Dataset input and output."""

from .libsvm import LibsvmDataset, load_libsvm, minmax_scale, write_libsvm

__all__ = ["LibsvmDataset", "load_libsvm", "minmax_scale", "write_libsvm"]

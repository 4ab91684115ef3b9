"""Wave-train stability toolkit for planar reaction-diffusion systems."""

__version__ = "0.1.0"

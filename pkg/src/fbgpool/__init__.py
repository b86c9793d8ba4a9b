"""Figure-Border-Ground region pooling and contour-based spatial pyramids
for semantic segmentation with object candidates."""

__version__ = "0.1.0"

"""Path-region predictor: an encoder-decoder segmentation net trained on
raster samples produced by the planner's data generator, exporting binary
region masks the planner can consume as soft constraints."""

__version__ = "0.1.0"

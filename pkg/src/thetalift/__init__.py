"""Eisenstein series, Siegel theta functions and the regularized theta lift."""

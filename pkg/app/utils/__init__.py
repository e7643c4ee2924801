"""
File formats (CSV, report JSON) and SVG plots.
"""

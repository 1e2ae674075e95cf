"""MESH optimizer, benchmark problems and cascaded hydro dispatch."""

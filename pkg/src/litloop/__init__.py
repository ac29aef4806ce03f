"""Idea development against the research literature.

The pipeline segments an idea into problem, contribution, and evaluation
facets, builds a paper corpus around it, and produces evidence-grounded
assessments with suggested rewrites.
"""

__version__ = "0.1.0"

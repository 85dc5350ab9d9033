"""Question answering over the DBLP knowledge graph.

The pipeline answers a natural language question in four steps:
translate it to a SPARQL-shaped logical form, resolve the entity
mentions against the DBLP search API, correct the query against a
template base mined from training data, and execute candidate queries
until one returns an answer.
"""

__version__ = "0.1.0"
